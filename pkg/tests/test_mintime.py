import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from resilia.errors import NotReachableWithinHorizon, NotResilientlyStabilizable, NotStabilizable
from resilia.geometry import HyperBox, VPolytope, vertices
from resilia.mintime import (
    ControlSignal,
    malfunction_reach_time,
    min_time,
    nominal_reach_time,
    reconstruct_controls,
    simulate,
    simulate_linear,
    sphere_grid,
)
from resilia.resilience import dual_control_set
from resilia.system import LinearSystem
from conftest import random_hurwitz

SCALAR = LinearSystem([[-1.0]], [[1.0, 0.5]], lost=[1])
DOUBLE_INTEGRATOR = (np.array([[0.0, 1.0], [0.0, 0.0]]), np.array([[0.0], [1.0]]))


class TestScalar:
    def test_nominal(self):
        res = min_time([[-1.0]], HyperBox([1.0]), [1.0])
        assert res.t_star == pytest.approx(math.log(2), abs=1e-6)
        assert res.converged and len(res.switch_times) == 0
        assert res.terminal_error <= 1e-6

    def test_origin(self):
        res = min_time([[-1.0]], HyperBox([1.0]), [0.0])
        assert res.t_star == 0.0

    def test_nominal_reach_time(self):
        sys = LinearSystem([[-1.0]], [[1.0]])
        assert nominal_reach_time(sys, [1.0]).t_star == pytest.approx(math.log(2), abs=1e-6)
        assert nominal_reach_time(sys, [0.0]).t_star == 0.0

    def test_malfunction(self):
        res = malfunction_reach_time(SCALAR, vertices(dual_control_set(SCALAR)), [1.0])
        assert res.t_star == pytest.approx(math.log(3), abs=1e-6)

    def test_unreachable(self):
        # x' = x + u with |u| <= 1 cannot return from x0 = 2
        with pytest.raises(NotReachableWithinHorizon):
            min_time([[1.0]], HyperBox([1.0]), [2.0], horizon=50.0)

    def test_not_stabilizable(self):
        with pytest.raises(NotStabilizable):
            nominal_reach_time(LinearSystem([[1.0]], [[1.0]]), [0.5])

    def test_verdict_gate(self):
        with pytest.raises(NotResilientlyStabilizable):
            malfunction_reach_time(SCALAR, dual_control_set(SCALAR), [1.0], verdict="no")


class TestReconstruction:
    def test_nominal(self):
        sys = LinearSystem([[-1.0]], [[1.0]])
        res = nominal_reach_time(sys, [1.0])
        rec = reconstruct_controls(res, sys, malfunction=False)
        _, u = rec.u.sample(50)
        np.testing.assert_allclose(u, -1.0)
        traj = simulate(sys, rec.u, None, [1.0], res.t_star)
        assert traj.terminal_error <= 1e-6

    def test_malfunction_identity(self):
        res = malfunction_reach_time(SCALAR, vertices(dual_control_set(SCALAR)), [1.0])
        rec = reconstruct_controls(res, SCALAR)
        _, z = rec.z.sample(20)
        _, w = rec.w.sample(20)
        _, u = rec.u.sample(20)
        np.testing.assert_allclose(z, -0.5, atol=1e-12)
        # w sits at its bound, so C w = +0.5 and B u = z - C w = -1
        np.testing.assert_allclose(w, 1.0, atol=1e-12)
        np.testing.assert_allclose(w @ SCALAR.C.T, 0.5, atol=1e-12)
        np.testing.assert_allclose(u, -1.0, atol=1e-12)
        assert simulate(SCALAR, rec.u, rec.w, [1.0], res.t_star).terminal_error <= 1e-6

    def test_zero_disturbance(self):
        sys = LinearSystem(-np.eye(2), [[1.0, 0.3, 0.2], [0.2, 1.0, 0.4]], half_widths=[1, 1, 0], lost=[2])
        x0 = [0.7, -0.4]
        tn = nominal_reach_time(sys, x0)
        tm = malfunction_reach_time(sys, vertices(dual_control_set(sys)), x0)
        assert abs(tm.t_star - tn.t_star) <= tn.time_tol


class TestDoubleIntegrator:
    def test_rest_to_rest(self):
        A, B = DOUBLE_INTEGRATOR
        res = min_time(A, VPolytope(np.array([[0.0, 1.0], [0.0, -1.0]])), [1.0, 0.0])
        assert res.t_star == pytest.approx(2.0, abs=1e-3)
        assert len(res.switch_times) == 1
        assert res.switch_times[0] == pytest.approx(1.0, abs=1e-3)
        assert res.terminal_error <= 10 * res.time_tol

    def test_reconstruct_switch(self):
        A, B = DOUBLE_INTEGRATOR
        sys = LinearSystem(A, B)
        res = nominal_reach_time(sys, [1.0, 0.0])
        rec = reconstruct_controls(res, sys, malfunction=False)
        assert len(rec.u.switch_times) == 1
        assert rec.u.switch_times[0] == pytest.approx(1.0, abs=1e-3)


class TestSimulation:
    def test_decay(self):
        sig = ControlSignal(np.array([0.0, 1.0]), np.zeros((1, 2)))
        traj = simulate_linear(-np.eye(2), sig, [1.0, 0.0], 1.0)
        np.testing.assert_allclose(traj.states[-1], [np.exp(-1.0), 0.0], atol=1e-9)

    def test_piecewise_constant_input(self):
        # x' = -x + u with u = 1 then -1: closed form at each breakpoint
        sig = ControlSignal(np.array([0.0, 0.5, 1.0]), np.array([[1.0], [-1.0]]))
        traj = simulate_linear([[-1.0]], sig, [0.0], 1.0)
        x_half = 1 - np.exp(-0.5)
        x_end = x_half * np.exp(-0.5) - (1 - np.exp(-0.5))
        np.testing.assert_allclose(traj.states[-1], [x_end], atol=1e-9)


def test_sphere_grid():
    g = sphere_grid(3, 200)
    np.testing.assert_allclose(np.linalg.norm(g, axis=1), 1.0)
    assert len(sphere_grid(1)) == 2


def _random_system(seed, n):
    rng = np.random.default_rng(seed)
    A = random_hurwitz(rng, n, margin=0.2)
    B_bar = rng.standard_normal((n, n + 1))
    B_bar[:, -1] *= 0.3
    x0 = rng.standard_normal(n)
    return LinearSystem(A, B_bar, lost=[n]), x0


@settings(max_examples=6)
@given(st.integers(0, 2**32 - 1))
def test_duality_ordering(seed):
    sys, x0 = _random_system(seed, 2)
    Z = dual_control_set(sys)
    if Z.degenerate or not Z.origin_interior():
        return
    tn = nominal_reach_time(sys, x0)
    tm = malfunction_reach_time(sys, vertices(Z), x0)
    assert tn.t_star <= tm.t_star + tm.time_tol
    rec = reconstruct_controls(tm, sys)
    err = simulate(sys, rec.u, rec.w, x0, tm.t_star).terminal_error
    assert err <= 10 * tm.time_tol * max(1.0, np.linalg.norm(x0))


@pytest.mark.parametrize("c", [-1.0, -0.3, 0.4, 1.0])
def test_constant_adversary_no_slower(c):
    # with w fixed and known the controller acts on B U + C w, which contains Z
    res = malfunction_reach_time(SCALAR, vertices(dual_control_set(SCALAR)), [1.0])
    shifted = VPolytope(np.array([[-1.0 + 0.5 * c], [1.0 + 0.5 * c]]))
    t = min_time([[-1.0]], shifted, [1.0]).t_star
    assert t <= res.t_star + res.time_tol
    assert t == pytest.approx(math.log(1 + 1 / (1 - 0.5 * c)), abs=1e-6)

import numpy as np
import pytest
from hypothesis import given, strategies as st

from resilia.bounds import RESIDUAL_TOL
from resilia.casestudy import build_temperature_system
from resilia.errors import DegenerateSet, NotHurwitz, OriginNotInterior
from resilia.geometry import HPolytope, VPolytope, Zonotope, pnorm_max, vertices, zonotope_to_hrep
from resilia.linalg import is_spd, lyapunov_residual
from resilia.pairs import inner_ellipsoid_pair, mvee_centered, outer_ellipsoid_pair, sample_pairs
from resilia.resilience import dual_control_set

seeds = st.integers(0, 2**32 - 1)
SQUARE = HPolytope(np.vstack([np.eye(2), -np.eye(2)]), np.ones(4))


class TestSampling:
    def test_negative_identity(self):
        pairs = sample_pairs(-np.eye(2), 10, seed=7)
        assert len(pairs) == 10
        for p in pairs:
            np.testing.assert_allclose(p.P, p.Q / 2, rtol=1e-12)

    def test_deterministic(self):
        A = np.array([[-1.0, 0.3], [0.0, -2.0]])
        a, b = sample_pairs(A, 5, seed=42), sample_pairs(A, 5, seed=42)
        for x, y in zip(a, b):
            assert np.array_equal(x.P, y.P) and np.array_equal(x.Q, y.Q)
        c = sample_pairs(A, 5, seed=43)
        assert not np.array_equal(a[0].Q, c[0].Q)

    def test_order_independent(self):
        A = -np.eye(3)
        full = sample_pairs(A, 8, seed=1)
        tail = sample_pairs(A, 3, seed=1, start=5)
        for x, y in zip(full[5:], tail):
            assert x.index == y.index and np.array_equal(x.Q, y.Q)

    def test_needs_hurwitz(self):
        with pytest.raises(NotHurwitz):
            sample_pairs(np.zeros((2, 2)), 1)

    def test_temperature_invariants(self):
        A = build_temperature_system().A
        for p in sample_pairs(A, 1000, seed=42):
            assert is_spd(p.P) and is_spd(p.Q)
            assert lyapunov_residual(A, p.P, p.Q) <= RESIDUAL_TOL * np.linalg.norm(p.Q, 2)


class TestOuter:
    def test_cross_polytope(self):
        res = outer_ellipsoid_pair(-np.eye(2), VPolytope(np.eye(2)))
        np.testing.assert_allclose(res.P, np.eye(2), atol=1e-6)
        assert res.pair is not None

    def test_square(self):
        res = outer_ellipsoid_pair(-np.eye(2), vertices(SQUARE))
        np.testing.assert_allclose(res.P, 0.5 * np.eye(2), atol=1e-6)

    def test_flat_points(self):
        with pytest.raises(DegenerateSet):
            mvee_centered(np.array([[1.0, 0.0], [2.0, 0.0]]))

    def test_temperature_normalised(self):
        sys = build_temperature_system(lost=("dw1",))
        V = vertices(dual_control_set(sys))
        res = outer_ellipsoid_pair(sys.A, V)
        assert res.pair is not None
        assert pnorm_max(V, res.pair.M)[0] == pytest.approx(1.0, abs=1e-6)

    def test_gate_drops_bad_pair(self):
        A = np.array([[-1.0, 10.0], [0.0, -1.0]])
        res = outer_ellipsoid_pair(A, vertices(SQUARE))
        assert res.pair is None and res.q_margin < 0


class TestInner:
    def test_square(self):
        np.testing.assert_allclose(inner_ellipsoid_pair(-np.eye(2), SQUARE).P, np.eye(2), atol=1e-6)

    def test_rectangle(self):
        R = HPolytope(np.vstack([np.eye(2), -np.eye(2)]), [2.0, 1.0, 2.0, 1.0])
        np.testing.assert_allclose(inner_ellipsoid_pair(-np.eye(2), R).P, np.diag([0.25, 1.0]), atol=1e-6)

    def test_needs_interior(self):
        with pytest.raises(OriginNotInterior):
            inner_ellipsoid_pair(-np.eye(2), HPolytope(SQUARE.normals, [1.0, 1.0, -0.5, 1.0]))


@given(seeds, st.integers(2, 3))
def test_containment_chain(seed, n):
    rng = np.random.default_rng(seed)
    H = zonotope_to_hrep(Zonotope(rng.standard_normal((n, n + 2))))
    V = vertices(H).vertices
    A = -np.eye(n)
    P_out = outer_ellipsoid_pair(A, VPolytope(V)).P
    P_in = inner_ellipsoid_pair(A, H).P
    q = np.einsum("ij,jk,ik->i", V, P_out, V)
    assert np.all(q <= 1 + 1e-6)
    assert np.sum(q >= 1 - 1e-4) >= n
    # the inner ellipsoid's support in each facet normal is sqrt(a^T P^-1 a)
    Pinv = np.linalg.inv(P_in)
    h = np.sqrt(np.einsum("ij,jk,ik->i", H.normals, Pinv, H.normals))
    assert np.all(H.offsets - h >= -1e-8)
    # the inner ellipsoid sits inside the outer one: P_in - P_out is PSD
    assert np.linalg.eigvalsh(P_in - P_out).min() >= -1e-8


@given(seeds)
def test_mvee_deterministic(seed):
    pts = np.random.default_rng(seed).standard_normal((6, 3))
    a, b = mvee_centered(pts), mvee_centered(pts)
    assert np.array_equal(a.P, b.P)

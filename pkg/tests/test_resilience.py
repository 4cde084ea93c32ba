import numpy as np
import pytest
from hypothesis import given, strategies as st

from resilia.casestudy import ACTUATORS, build_temperature_system
from resilia.errors import HypothesisUnavailable
from resilia.geometry import HPolytope, vertices
from resilia.resilience import (
    Ternary,
    analyze,
    check_full_actuation,
    check_resilient,
    check_stabilizable,
    dual_control_set,
    dual_control_set_or_none,
)
from resilia.system import LinearSystem
from conftest import random_hurwitz

seeds = st.integers(0, 2**32 - 1)


def box(lo, hi):
    lo, hi = np.asarray(lo, float), np.asarray(hi, float)
    n = lo.size
    return HPolytope(np.vstack([np.eye(n), -np.eye(n)]), np.concatenate([hi, -lo]))


class TestDualControlSet:
    def test_driftless_example(self):
        sys = LinearSystem(np.zeros((2, 2)), [[1.0, 0.0, 0.5], [0.0, 1.0, 0.0]], lost=[2])
        V = vertices(dual_control_set(sys)).vertices
        np.testing.assert_allclose(np.abs(V), np.tile([0.5, 1.0], (4, 1)))

    def test_flat_control_set(self):
        sys = LinearSystem(np.zeros((2, 2)), [[1.0, 1.0], [0.0, 0.0]], lost=[1])
        assert dual_control_set_or_none(sys) is None


class TestResilient:
    def test_driftless(self):
        sys = LinearSystem(np.zeros((2, 2)), [[1.0, 0.0, 0.5], [0.0, 1.0, 0.0]], lost=[2])
        v = check_resilient(sys)
        assert v.resilient is Ternary.YES and v.stabilizable is Ternary.YES

    @pytest.mark.parametrize("name", ACTUATORS)
    def test_temperature_never_resilient(self, name):
        v = check_resilient(build_temperature_system(lost=(name,)))
        assert v.resilient is Ternary.NO

    def test_rotation(self):
        sys = LinearSystem([[0.0, 1.0], [-1.0, 0.0]], np.eye(2))
        assert check_resilient(sys).resilient is Ternary.YES

    def test_rotation_ignores_eigenvector_test(self):
        # no real eigenvectors, so a Z touching the origin is still fine
        sys = LinearSystem([[0.0, 1.0], [-1.0, 0.0]], np.eye(2))
        assert check_resilient(sys, box([0, -1], [1, 1])).resilient is Ternary.YES

    @pytest.mark.parametrize("lo,hi", [([0, -1], [1, 1]), ([-1, -1], [0, 1])])
    def test_eigenvector_either_sign(self, lo, hi):
        sys = LinearSystem(np.zeros((2, 2)), np.eye(2))
        v = check_resilient(sys, box(lo, hi))
        assert v.resilient is Ternary.NO
        assert v.conditions[-1].name == "eigenvector test"

    def test_degenerate_is_undecided(self):
        sys = LinearSystem([[0.0]], [[1.0, 1.0]], lost=[1])
        assert check_resilient(sys).resilient is Ternary.UNDECIDED
        with pytest.raises(HypothesisUnavailable):
            check_resilient(sys, strict=True)

    def test_spectrum_failure_wins(self):
        sys = LinearSystem([[1.0]], [[1.0, 1.0]], lost=[1])
        assert check_resilient(sys).resilient is Ternary.NO
        assert check_stabilizable(sys).stabilizable is Ternary.NO


class TestStabilizable:
    def test_temperature_dw1(self):
        assert check_stabilizable(build_temperature_system(lost=("dw1",))).stabilizable is Ternary.YES

    def test_unstable_scalar(self):
        sys = LinearSystem([[1.0]], [[1.0, 0.5]], lost=[1])
        assert check_stabilizable(sys).stabilizable is Ternary.NO

    def test_hurwitz_with_interior(self):
        sys = LinearSystem(-np.eye(2), np.eye(2))
        v = check_stabilizable(sys)
        assert v.stabilizable is Ternary.YES

    def test_analyze_combines(self):
        v = analyze(build_temperature_system(lost=("hac",)))
        assert v.resilient is Ternary.NO and v.stabilizable is Ternary.YES
        d = v.to_dict()
        assert d["resilient"] == "no" and d["stabilizable"] == "yes"


class TestFullActuation:
    def test_identity(self):
        sys = LinearSystem(-np.eye(2), [[1.0, 0.0, 0.5], [0.0, 1.0, 0.0]], lost=[2])
        fa = check_full_actuation(sys)
        assert fa.holds and fa.delta == pytest.approx(0.5)

    def test_rank_deficient(self):
        sys = LinearSystem(-np.eye(2), [[1.0, 0.5], [0.0, 0.0]], lost=[1])
        fa = check_full_actuation(sys)
        assert not fa.holds and fa.rank == 1

    def test_temperature_hac(self):
        assert check_full_actuation(build_temperature_system(lost=("hac",))).holds


def _random_system(seed, n):
    rng = np.random.default_rng(seed)
    A = random_hurwitz(rng, n)
    B_bar = rng.standard_normal((n, n + 2))
    return LinearSystem(A, B_bar, lost=[n + 1]), rng


@given(seeds, st.integers(2, 3))
def test_full_actuation_implies_interior(seed, n):
    sys, _ = _random_system(seed, n)
    if check_full_actuation(sys).holds:
        Z = dual_control_set(sys)
        assert not Z.degenerate and Z.origin_interior()
        assert check_stabilizable(sys, Z).stabilizable is Ternary.YES


@given(seeds, st.integers(2, 3), st.floats(1.0, 4.0))
def test_monotone_damage(seed, n, factor):
    sys, _ = _random_system(seed, n)
    before = check_stabilizable(sys).stabilizable
    hw = sys.half_widths.copy()
    hw[list(sys.lost)] *= factor
    after = check_stabilizable(sys.with_half_widths(hw)).stabilizable
    if before is not Ternary.YES:
        assert after is not Ternary.YES

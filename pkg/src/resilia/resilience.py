"""Resilience verdicts after loss of control over some actuators.

The dual control set ``Z = BU ⊖ (-CW)`` is the authority left once every
admissible undesirable input has been cancelled.  Reaching the origin
under every ``w`` is equivalent to reaching it with controls in ``Z``, so
each verdict reduces to a spectral condition on ``A`` plus a condition on
how the real eigenvectors of ``A^T`` meet ``Z``.
"""

import enum
from dataclasses import dataclass, field
from typing import Any, NamedTuple

import numpy as np

from .errors import DegenerateSet, DegenerateZonotope, HypothesisUnavailable
from .geometry import (
    FACET_TOL,
    HPolytope,
    contains_in_interior,
    pontryagin_diff,
    vertices,
    zonotope_to_hrep,
)
from .linalg import spectrum
from .system import LinearSystem


class Ternary(str, enum.Enum):
    YES = "yes"
    NO = "no"
    UNDECIDED = "undecided"


class Condition(NamedTuple):
    name: str
    status: str          # "pass", "fail" or "n/a"
    certificate: Any = None


@dataclass(frozen=True)
class ResilienceVerdict:
    resilient: Ternary
    stabilizable: Ternary
    conditions: list = field(default_factory=list)
    reason: str = ""

    def to_dict(self):
        return {
            "resilient": self.resilient.value,
            "stabilizable": self.stabilizable.value,
            "reason": self.reason,
            "conditions": [
                {"name": c.name, "status": c.status, "certificate": c.certificate}
                for c in self.conditions
            ],
        }


def default_tol_re(A):
    """Threshold for treating ``Re(lambda)`` as zero."""
    return 1e-7 * (1.0 + np.linalg.norm(A, np.inf))


def dual_control_set(sys: LinearSystem) -> HPolytope:
    """``Z = BU ⊖ (-CW)`` in facet form.

    Raises ``DegenerateZonotope`` when the retained columns do not span
    the state space, in which case ``BU`` has no interior.
    """
    BU = zonotope_to_hrep(sys.control_set)
    return pontryagin_diff(BU, -sys.disturbance_set)


def dual_control_set_or_none(sys: LinearSystem):
    """Like :func:`dual_control_set` but ``None`` when ``BU`` is flat."""
    try:
        return dual_control_set(sys)
    except DegenerateZonotope:
        return None


def _interior_hypothesis(Z: HPolytope, tol):
    """Return ``(origin_in_Z, interior_nonempty, origin_interior, radius)``."""
    if Z is None:
        return False, False, False, 0.0
    origin_in = bool(np.all(Z.offsets >= -tol))
    _, radius = Z.chebyshev()
    nonempty = radius > tol
    return origin_in, nonempty, bool(np.all(Z.offsets > tol)), radius


def _eigenvector_test(spec, Z: HPolytope, tol):
    """Find a real eigenvector ``v`` of ``A^T`` (either sign) with ``v^T z <= 0`` on Z.

    Returns ``None`` when none exists, else ``(lambda, v, max v^T z)``.
    """
    if not spec.real_eigenvectors:
        return None
    V = vertices(Z).vertices
    for lam, v in spec.real_eigenvectors:
        for s in (1.0, -1.0):
            top = float(np.max(V @ (s * v)))
            if top <= tol:
                return lam, s * v, top
    return None


def _verdict(sys, Z, tol_re, tol, marginal):
    """Shared logic; ``marginal`` selects the resilience (vs stabilizability) test."""
    A = sys.A
    spec = spectrum(A)
    re = spec.eigenvalues.real
    if marginal:
        spec_ok = bool(np.all(np.abs(re) <= tol_re))
        spec_name = "marginal spectrum"
    else:
        spec_ok = bool(np.all(re <= tol_re))
        spec_name = "semistable spectrum"
    eig_cert = [[float(v.real), float(v.imag)] for v in spec.eigenvalues]
    conditions = []

    origin_in, nonempty, origin_int, radius = _interior_hypothesis(Z, tol)
    hyp_ok = origin_in and nonempty
    conditions.append(Condition("0 in Z with nonempty interior", "pass" if hyp_ok else "fail",
                                {"min_offset": float(Z.offsets.min()) if Z is not None else None,
                                 "chebyshev_radius": float(radius)}))
    conditions.append(Condition(spec_name, "pass" if spec_ok else "fail", eig_cert))
    if not spec_ok:
        # with bounded inputs a mode outside the allowed half plane cannot be
        # steered arbitrarily, whatever Z looks like
        return Ternary.NO, conditions, f"{spec_name} test failed"
    if not hyp_ok:
        # the characterisation only holds under this hypothesis
        return Ternary.UNDECIDED, conditions, "0 in Z with nonempty interior does not hold"

    if origin_int:
        conditions.append(Condition("0 in int(Z)", "pass", {"min_offset": float(Z.offsets.min())}))
        conditions.append(Condition("eigenvector test", "n/a", "implied by 0 in int(Z)"))
        return Ternary.YES, conditions, ""

    conditions.append(Condition("0 in int(Z)", "fail", {"min_offset": float(Z.offsets.min())}))
    hit = _eigenvector_test(spec, Z, tol)
    if hit is None:
        conditions.append(Condition("eigenvector test", "pass", None))
        return Ternary.YES, conditions, ""
    lam, v, top = hit
    conditions.append(Condition("eigenvector test", "fail",
                                {"eigenvalue": lam, "vector": v.tolist(), "max_vTz": top}))
    return Ternary.NO, conditions, "a real eigenvector of A^T has Z in its closed negative halfspace"


def check_resilient(sys: LinearSystem, Z: HPolytope = None, tol_re=None, tol=FACET_TOL,
                    strict=False) -> ResilienceVerdict:
    """Decide whether every target stays reachable after the actuator loss.

    Requires a marginal spectrum (all ``|Re lambda| <= tol_re``) and no real
    eigenvector ``v`` of ``A^T`` with ``v^T z <= 0`` on all of Z.  When the
    hypothesis ``0 in Z, int(Z) != {}`` fails the verdict is undecided; pass
    ``strict=True`` to raise :class:`HypothesisUnavailable` instead.
    """
    Z = dual_control_set_or_none(sys) if Z is None else Z
    tol_re = default_tol_re(sys.A) if tol_re is None else tol_re
    res, conds, reason = _verdict(sys, Z, tol_re, tol, marginal=True)
    if strict and res is Ternary.UNDECIDED:
        raise HypothesisUnavailable(reason)
    stab = Ternary.YES if res is Ternary.YES else Ternary.UNDECIDED
    return ResilienceVerdict(resilient=res, stabilizable=stab, conditions=conds, reason=reason)


def check_stabilizable(sys: LinearSystem, Z: HPolytope = None, tol_re=None, tol=FACET_TOL,
                       strict=False) -> ResilienceVerdict:
    """Decide whether the origin stays reachable after the actuator loss.

    Same structure as :func:`check_resilient` with ``Re lambda <= tol_re``
    in place of the marginal spectrum test.
    """
    Z = dual_control_set_or_none(sys) if Z is None else Z
    tol_re = default_tol_re(sys.A) if tol_re is None else tol_re
    res, conds, reason = _verdict(sys, Z, tol_re, tol, marginal=False)
    if strict and res is Ternary.UNDECIDED:
        raise HypothesisUnavailable(reason)
    # resilience implies stabilizability but not conversely
    resil = Ternary.NO if res is Ternary.NO else Ternary.UNDECIDED
    return ResilienceVerdict(resilient=resil, stabilizable=res, conditions=conds, reason=reason)


def analyze(sys: LinearSystem, Z: HPolytope = None, tol_re=None, tol=FACET_TOL) -> ResilienceVerdict:
    """Both verdicts combined, with the conditions of each check listed."""
    Z = dual_control_set_or_none(sys) if Z is None else Z
    r = check_resilient(sys, Z, tol_re, tol)
    s = check_stabilizable(sys, Z, tol_re, tol)
    conds = [Condition("resilient: " + c.name, c.status, c.certificate) for c in r.conditions]
    conds += [Condition("stabilizable: " + c.name, c.status, c.certificate) for c in s.conditions]
    reason = "; ".join(x for x in (r.reason, s.reason) if x)
    return ResilienceVerdict(r.resilient, s.stabilizable, conds, reason)


class FullActuation(NamedTuple):
    holds: bool
    rank: int
    delta: float
    facet: int


def check_full_actuation(sys: LinearSystem, margin=0.0, tol=1e-10) -> FullActuation:
    """Sufficient condition for ``0 in int(Z)``: ``rank B = n`` and ``-CW in int(BU)``.

    ``delta`` is the smallest facet slack of ``-CW`` inside ``BU``: the ball
    of that radius around ``-CW`` still fits in ``BU``.
    """
    s = np.linalg.svd(sys.B, compute_uv=False)
    rank = int(np.sum(s > tol * s[0])) if s.size else 0
    if rank < sys.n:
        return FullActuation(False, rank, float("nan"), -1)
    BU = zonotope_to_hrep(sys.control_set)
    chk = contains_in_interior(-sys.disturbance_set, BU, margin)
    holds = chk.contained and chk.slack > 0.0
    return FullActuation(bool(holds), rank, chk.slack, chk.facet)


def z_vertices(Z: HPolytope):
    """Vertices of Z, raising ``DegenerateSet`` for a flat or empty Z."""
    if Z.degenerate:
        raise DegenerateSet("Z has empty interior")
    return vertices(Z)

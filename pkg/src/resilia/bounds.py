"""Analytical reach-time bounds from a Lyapunov pair.

For ``A^T P + P A = -Q`` the P-norm of the state obeys a scalar
differential inequality, which yields lower and upper bounds on the minimum
time to reach the origin of the form

    L(l1, l2, h) = 2 (l1 / l2) ln(1 + l2 ||x0||_P / (2 l1 h))

with ``(l1, l2, h)`` taken from the eigenvalue extremes of ``P`` and ``Q``
and a P-norm extremal of the control set.
"""

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import EmptyPairList, InvalidPair
from .geometry import HPolytope, pnorm_max, pnorm_min_boundary
from .linalg import as_square, cholesky_factor, lyapunov_residual, solve_lyapunov

RESIDUAL_TOL = 1e-8


@dataclass(frozen=True, eq=False)
class LyapunovPair:
    """``(P, Q)`` with ``A^T P + P A = -Q``, both SPD, plus cached spectra."""

    P: np.ndarray
    Q: np.ndarray
    M: np.ndarray
    lam_min_P: float
    lam_max_P: float
    lam_min_Q: float
    lam_max_Q: float
    kind: str = "user"
    index: Optional[int] = None

    @classmethod
    def build(cls, A, P, Q, kind="user", index=None, check=True):
        A = as_square(A)
        P = as_square(P)
        Q = as_square(Q)
        try:
            M = cholesky_factor(P)
            cholesky_factor(Q)
        except Exception as exc:
            raise InvalidPair(f"pair is not positive definite: {exc}") from exc
        if check:
            res = lyapunov_residual(A, P, Q)
            if res > RESIDUAL_TOL * max(np.linalg.norm(Q, 2), 1e-300):
                raise InvalidPair(f"Lyapunov residual {res:.3e} is too large")
        lp = np.linalg.eigvalsh(P)
        lq = np.linalg.eigvalsh(Q)
        return cls(P, Q, M, float(lp[0]), float(lp[-1]), float(lq[0]), float(lq[-1]), kind, index)

    @classmethod
    def from_Q(cls, A, Q, kind="user", index=None):
        return cls.build(A, solve_lyapunov(A, Q), Q, kind, index)

    @classmethod
    def from_P(cls, A, P, kind="user", index=None):
        """Pair with ``Q := -(A^T P + P A)``; raises InvalidPair if Q is not SPD."""
        A = as_square(A)
        P = as_square(P)
        Q = -(A.T @ P + P @ A)
        return cls.build(A, P, 0.5 * (Q + Q.T), kind, index)

    @property
    def lam_ratio(self):
        """``lam_min_P lam_min_Q / (lam_max_P lam_max_Q)``, at most 1."""
        return self.lam_min_P * self.lam_min_Q / (self.lam_max_P * self.lam_max_Q)

    def pnorm(self, x):
        return float(np.linalg.norm(self.M @ np.asarray(x, dtype=float)))


@dataclass(frozen=True)
class Extremals:
    """P-norm extremes of the nominal set and of Z; ``None`` when unavailable."""

    b_max: float
    b_min: Optional[float] = None
    z_max: Optional[float] = None
    z_min: Optional[float] = None


def extremals(pair: LyapunovPair, nominal_set, nominal_hrep: Optional[HPolytope] = None,
              Z_vertices=None, Z_hrep: Optional[HPolytope] = None) -> Extremals:
    """Compute the four extremals for one pair.

    ``b_min`` is the boundary minimum over the polytope ``B_bar U_bar``
    (``nominal_hrep``); it needs 0 in the interior, i.e. ``rank B_bar = n``.
    """
    M = pair.M
    b_max = pnorm_max(nominal_set, M)[0]
    b_min = pnorm_min_boundary(nominal_hrep, M)[0] if nominal_hrep is not None else None
    z_max = pnorm_max(Z_vertices, M)[0] if Z_vertices is not None else None
    z_min = None
    if Z_hrep is not None and not Z_hrep.degenerate and Z_hrep.origin_interior():
        z_min = pnorm_min_boundary(Z_hrep, M)[0]
    return Extremals(b_max, b_min, z_max, z_min)


def reach_bound(l1, l2, x0_pnorm, h):
    """``2 (l1/l2) ln(1 + l2 ||x0||_P / (2 l1 h))``."""
    return 2.0 * (l1 / l2) * np.log1p(l2 * x0_pnorm / (2.0 * l1 * h))


def _lower(pair, x0n, h_max):
    return float(reach_bound(pair.lam_min_P, pair.lam_max_Q, x0n, h_max))


def _upper(pair, x0n, h_min):
    return float(reach_bound(pair.lam_max_P, pair.lam_min_Q, x0n, h_min))


def _check_extremes(hi, lo):
    if hi is not None and not hi > 0:
        raise ValueError("maximal P-norm must be positive")
    if lo is not None and hi is not None and lo > hi * (1 + 1e-12):
        raise ValueError("boundary minimum exceeds the maximum")


def bound_tn(pair: LyapunovPair, x0, b_max, b_min=None):
    """Lower and upper bounds on the nominal reach time.

    The upper bound needs ``rank B_bar = n`` and a Hurwitz ``A``; pass
    ``b_min=None`` when that fails and the upper side comes back ``None``.
    """
    _check_extremes(b_max, b_min)
    x0n = pair.pnorm(x0)
    upper = _upper(pair, x0n, b_min) if b_min is not None and b_min > 0 else None
    return _lower(pair, x0n, b_max), upper


def bound_tm(pair: LyapunovPair, x0, z_max=None, z_min=None):
    """Bounds on the malfunctioning reach time; a side is ``None`` when its extremal is."""
    _check_extremes(z_max, z_min)
    x0n = pair.pnorm(x0)
    lower = _lower(pair, x0n, z_max) if z_max is not None else None
    upper = _upper(pair, x0n, z_min) if z_min is not None and z_min > 0 else None
    return lower, upper


def bound_rq(pair: LyapunovPair, b_max=None, b_min=None, z_max=None, z_min=None):
    """Interval for the quantitative resilience ``inf_x0 T_N*/T_M*``.

    lower = max(lambda ratio, z_min / b_max), upper = max(1 / lambda ratio, z_max / b_min);
    a side is ``None`` when one of its extremals is missing.
    """
    r = pair.lam_ratio
    lower = max(r, z_min / b_max) if z_min is not None and b_max is not None else None
    upper = max(1.0 / r, z_max / b_min) if z_max is not None and b_min else None
    return lower, upper


@dataclass
class ReachBounds:
    """Bounds for one pair or the elementwise best over several.

    Missing sides are ``None`` with an entry in ``reasons``.  ``best_of``
    maps each field to the index (in the input list) of the pair that
    achieved it, for aggregated results.
    """

    x0_Pnorm: Optional[float] = None
    tn_lower: Optional[float] = None
    tn_upper: Optional[float] = None
    tm_lower: Optional[float] = None
    tm_upper: Optional[float] = None
    rq_lower: Optional[float] = None
    rq_upper: Optional[float] = None
    extremals: Optional[Extremals] = None
    kind: str = ""
    reasons: dict = field(default_factory=dict)
    best_of: dict = field(default_factory=dict)

    @property
    def rq_upper_informative(self):
        """An upper bound above 1 says nothing about r_q, which never exceeds 1."""
        return self.rq_upper is not None and self.rq_upper <= 1.0

    def as_dict(self):
        return {
            "kind": self.kind,
            "x0_Pnorm": self.x0_Pnorm,
            "tn_lower": self.tn_lower,
            "tn_upper": self.tn_upper,
            "tm_lower": self.tm_lower,
            "tm_upper": self.tm_upper,
            "rq_lower": self.rq_lower,
            "rq_upper": self.rq_upper,
            "rq_upper_informative": self.rq_upper_informative,
            "reasons": dict(self.reasons),
            "best_of": dict(self.best_of),
        }


BOUND_FIELDS = ("tn_lower", "tn_upper", "tm_lower", "tm_upper", "rq_lower", "rq_upper")


def pair_bounds(pair: LyapunovPair, x0, ext: Extremals, *, full_rank=True, hurwitz=True,
                stabilizable=True, origin_interior_Z=True) -> ReachBounds:
    """All bounds for one pair, honouring the hypotheses of each side.

    Flags:
        full_rank: ``rank B_bar = n`` (nominal upper bound, r_q upper bound).
        hurwitz: ``A`` Hurwitz (upper bounds and r_q).
        stabilizable: resilient stabilizability (malfunction lower bound, r_q upper).
        origin_interior_Z: ``0 in int(Z)`` (malfunction upper bound, r_q lower).
    """
    rb = ReachBounds(x0_Pnorm=pair.pnorm(x0), extremals=ext, kind=pair.kind)
    why = rb.reasons

    b_min = ext.b_min if (full_rank and hurwitz) else None
    if not full_rank:
        why["tn_upper"] = "B_bar does not have full row rank"
    elif not hurwitz:
        why["tn_upper"] = "A is not Hurwitz"
    elif b_min is None:
        why["tn_upper"] = "b_min unavailable"
    rb.tn_lower, rb.tn_upper = bound_tn(pair, x0, ext.b_max, b_min)

    z_max = ext.z_max if stabilizable else None
    z_min = ext.z_min if (origin_interior_Z and hurwitz) else None
    if not stabilizable:
        why["tm_lower"] = "not resiliently stabilizable"
    elif z_max is None:
        why["tm_lower"] = "Z has no vertices"
    if not origin_interior_Z:
        why["tm_upper"] = "0 is not in the interior of Z"
    elif not hurwitz:
        why["tm_upper"] = "A is not Hurwitz"
    elif z_min is None:
        why["tm_upper"] = "z_min unavailable"
    rb.tm_lower, rb.tm_upper = bound_tm(pair, x0, z_max, z_min)

    if hurwitz and origin_interior_Z and ext.z_min is not None:
        rb.rq_lower = bound_rq(pair, b_max=ext.b_max, z_min=ext.z_min)[0]
    else:
        why["rq_lower"] = "requires A Hurwitz and 0 in int(Z)"
    if hurwitz and full_rank and stabilizable and ext.z_max is not None and ext.b_min:
        rb.rq_upper = bound_rq(pair, b_min=ext.b_min, z_max=ext.z_max)[1]
    else:
        why["rq_upper"] = "requires A Hurwitz, rank B_bar = n and resilient stabilizability"
    return rb


def best_bounds(results) -> ReachBounds:
    """Elementwise best (largest lower, smallest upper) over per-pair bounds.

    Ties keep the earliest pair.  ``best_of`` records the winning index.
    """
    results = list(results)
    if not results:
        raise EmptyPairList("no Lyapunov pairs to aggregate")
    out = ReachBounds(kind="best")
    for name in BOUND_FIELDS:
        vals = [(i, getattr(r, name)) for i, r in enumerate(results) if getattr(r, name) is not None]
        if not vals:
            out.reasons[name] = results[0].reasons.get(name, "unavailable for every pair")
            continue
        pick = max if name.endswith("lower") else min
        i, v = pick(vals, key=lambda t: (t[1], -t[0]) if pick is max else (t[1], t[0]))
        setattr(out, name, v)
        out.best_of[name] = i
    return out

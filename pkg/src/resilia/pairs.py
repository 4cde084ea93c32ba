"""Candidate Lyapunov pairs: seeded random sampling and ellipsoid-shaped P.

Random pairs draw ``Q = G G^T + eps I`` with a counter-based generator so
that pair ``i`` depends only on ``(seed, i)``.  Ellipsoid pairs pick ``P``
from a centred ellipsoid fitted to a control set and set
``Q := -(A^T P + P A)``, which need not be positive definite.
"""

from dataclasses import dataclass
from typing import NamedTuple, Optional

import numpy as np

from .bounds import LyapunovPair
from .errors import DegenerateSet, InvalidPair, NotHurwitz, OriginNotInterior
from .geometry import HPolytope, VPolytope
from .linalg import as_square, spectrum

MVEE_TOL = 1e-7
MVEE_MAX_ITER = 100_000


def _generator(seed, index):
    key = np.array([int(seed) & 0xFFFFFFFFFFFFFFFF, int(index)], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def random_Q(n, seed, index):
    """SPD matrix ``G G^T + 1e-3 tr(G G^T)/n I`` with ``G`` standard normal."""
    G = _generator(seed, index).standard_normal((n, n))
    Q = G @ G.T
    return Q + 1e-3 * np.trace(Q) / n * np.eye(n)


def sample_pairs(A, count, seed=0, start=0):
    """``count`` random pairs; pair ``i`` is a pure function of ``(A, seed, i)``."""
    A = as_square(A)
    if not spectrum(A).hurwitz:
        raise NotHurwitz("random pairs need a Hurwitz A")
    n = A.shape[0]
    return [LyapunovPair.from_Q(A, random_Q(n, seed, i), kind="random", index=i)
            for i in range(start, start + count)]


class MVEEResult(NamedTuple):
    P: np.ndarray
    weights: np.ndarray
    iterations: int
    gap: float


def mvee_centered(points, tol=MVEE_TOL, max_iter=MVEE_MAX_ITER) -> MVEEResult:
    """Minimum-volume origin-centred ellipsoid ``{x : x^T P x <= 1}`` containing ``±points``.

    Khachiyan's multiplicative scheme with Todd-Yildirim away steps, run on
    the symmetrised point set.  Stops when ``max_j x_j^T X(u)^-1 x_j <= (1+tol) n``.
    ``P`` is finally rescaled so the farthest point lies on the boundary.
    """
    X = np.asarray(points, dtype=float)
    X = np.vstack([X, -X])
    m, n = X.shape
    if np.linalg.matrix_rank(X) < n:
        raise DegenerateSet("points do not span the space")
    u = np.full(m, 1.0 / m)
    gap = np.inf
    it = 0
    for it in range(1, max_iter + 1):
        S = (X.T * u) @ X
        g = np.einsum("ij,ij->i", X @ np.linalg.inv(S), X)
        j = int(np.argmax(g))
        gap = g[j] / n - 1.0
        if gap <= tol:
            break
        support = u > 0
        k = int(np.argmin(np.where(support, g, np.inf)))
        away = 1.0 - g[k] / n
        if away > gap and g[k] < n and u[k] < 1.0:
            # away step: shrink the weight of the most interior support point
            drop = -u[k] / (1.0 - u[k])
            # for g <= 1 the objective improves all the way to dropping the point
            step = drop if g[k] <= 1.0 else max((g[k] / n - 1.0) / (g[k] - 1.0), drop)
            u *= 1.0 - step
            u[k] += step
        else:
            step = gap / (g[j] - 1.0)
            u *= 1.0 - step
            u[j] += step
        u = np.maximum(u, 0.0)
    P = np.linalg.inv((X.T * u) @ X) / n
    P = 0.5 * (P + P.T)
    P /= np.max(np.einsum("ij,jk,ik->i", X, P, X))
    return MVEEResult(P, u, it, float(gap))


@dataclass(frozen=True)
class EllipsoidPair:
    """Outcome of an ellipsoid-based pair construction.

    ``pair`` is ``None`` when ``Q = -(A^T P + P A)`` fails the SPD test;
    ``q_margin`` is the smallest eigenvalue of that Q either way.
    """

    P: np.ndarray
    q_margin: float
    pair: Optional[LyapunovPair]
    iterations: int
    kind: str


def _gate(A, P, kind, iterations):
    Q = -(A.T @ P + P @ A)
    Q = 0.5 * (Q + Q.T)
    margin = float(np.linalg.eigvalsh(Q)[0])
    pair = None
    if margin > 0:
        try:
            pair = LyapunovPair.build(A, P, Q, kind=kind)
        except InvalidPair:
            pair = None
    return EllipsoidPair(P, margin, pair, iterations, kind)


def outer_ellipsoid_pair(A, Z_vertices: VPolytope, kind="outer") -> EllipsoidPair:
    """``P`` of the smallest centred ellipsoid around a symmetric polytope.

    Normalised so that ``max_v ||v||_P = 1`` over the vertices.
    """
    A = as_square(A)
    pts = Z_vertices.vertices if isinstance(Z_vertices, VPolytope) else np.asarray(Z_vertices, float)
    res = mvee_centered(pts)
    return _gate(A, res.P, kind, res.iterations)


def inner_ellipsoid_pair(A, Z_hrep: HPolytope, kind="inner") -> EllipsoidPair:
    """``P`` of the largest centred ellipsoid inside a polytope containing 0.

    The ellipsoid ``{x^T P x <= 1}`` lies in ``{a_i^T x <= b_i}`` iff
    ``a_i^T P^-1 a_i <= b_i^2``, i.e. iff the polar ellipsoid
    ``{y^T P^-1 y <= 1}`` contains every ``a_i / b_i``.  Maximising the
    volume of the inner ellipsoid minimises that of the polar one, so the
    problem is the same centred MVEE applied to the points ``a_i / b_i``.
    Normalised so that the minimum P-norm over the boundary is 1.
    """
    A = as_square(A)
    if Z_hrep.degenerate or not Z_hrep.origin_interior():
        raise OriginNotInterior("the inscribed ellipsoid needs 0 in the interior")
    res = mvee_centered(Z_hrep.normals / Z_hrep.offsets[:, None])
    P = np.linalg.inv(res.P)
    P = 0.5 * (P + P.T)
    # scale so that max_i a_i^T P^-1 a_i / b_i^2 = 1
    Pinv = np.linalg.inv(P)
    t = np.einsum("ij,jk,ik->i", Z_hrep.normals, Pinv, Z_hrep.normals) / Z_hrep.offsets ** 2
    P = P * np.max(t)
    return _gate(A, P, kind, res.iterations)

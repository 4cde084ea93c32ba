"""Origin-centred convex polytopes used as control sets.

Three interchangeable descriptions are supported:

* :class:`HyperBox` -- a symmetric box ``{u : |u_i| <= h_i}``;
* :class:`Zonotope` -- ``{G a : |a_i| <= 1}``, the image of a unit box;
* :class:`HPolytope` / :class:`VPolytope` -- facet and vertex descriptions.

Every set exposes ``support(a)`` (vectorised over leading axes of ``a``) and
``support_point(a)``, a maximiser of ``a^T x``.  Ties are broken towards the
lowest vertex index, or towards the positive sign for box-like sets.

Facet enumeration and vertex enumeration are combinatorial and only meant
for n <= 4.
"""

import itertools
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy.optimize import linprog, lsq_linear

from .errors import (
    DegenerateSet,
    DegenerateZonotope,
    DimensionMismatch,
    OriginNotInterior,
    UnboundedSet,
)

FACET_TOL = 1e-9
VERTEX_TOL = 1e-8
MAX_PATTERNS = 2 ** 16


def _signs(x):
    return np.where(x >= 0.0, 1.0, -1.0)


def _check_dim(dim, a):
    a = np.asarray(a, dtype=float)
    if a.shape[-1] != dim:
        raise DimensionMismatch(f"direction has dimension {a.shape[-1]}, set has dimension {dim}")
    return a


@dataclass(frozen=True, eq=False)
class HyperBox:
    half_widths: np.ndarray

    def __post_init__(self):
        hw = np.atleast_1d(np.asarray(self.half_widths, dtype=float))
        # a zero half-width pins that input at 0
        if hw.ndim != 1 or np.any(~np.isfinite(hw)) or np.any(hw < 0):
            raise ValueError("half-widths must be finite and non-negative")
        object.__setattr__(self, "half_widths", hw)

    @classmethod
    def unit(cls, dim):
        return cls(np.ones(dim))

    @property
    def dim(self):
        return self.half_widths.size

    def support(self, a):
        a = _check_dim(self.dim, a)
        return np.abs(a) @ self.half_widths

    def support_point(self, a):
        a = _check_dim(self.dim, a)
        return _signs(a) * self.half_widths

    def face_label(self, a):
        a = _check_dim(self.dim, a)
        return (a >= 0) @ (1 << np.arange(self.dim))

    def vertices(self):
        patterns = np.array(list(itertools.product((-1.0, 1.0), repeat=self.dim)))
        return VPolytope(patterns * self.half_widths)


@dataclass(frozen=True, eq=False)
class Zonotope:
    """Centrally symmetric zonotope ``{G a : ||a||_inf <= 1}``; columns of G are generators."""

    generators: np.ndarray

    def __post_init__(self):
        G = np.asarray(self.generators, dtype=float)
        if G.ndim == 1:
            G = G.reshape(-1, 1)
        if not np.all(np.isfinite(G)):
            raise ValueError("generators must be finite")
        object.__setattr__(self, "generators", G)

    @property
    def dim(self):
        return self.generators.shape[0]

    @property
    def center(self):
        return np.zeros(self.dim)

    def __neg__(self):
        return Zonotope(-self.generators)

    def support(self, a):
        a = _check_dim(self.dim, a)
        return np.abs(a @ self.generators).sum(axis=-1)

    def support_point(self, a):
        a = _check_dim(self.dim, a)
        return _signs(a @ self.generators) @ self.generators.T

    def face_label(self, a):
        a = _check_dim(self.dim, a)
        k = self.generators.shape[1]
        return ((a @ self.generators) >= 0) @ (1 << np.arange(k))

    def sign_patterns(self):
        k = self.generators.shape[1]
        if 2 ** k > MAX_PATTERNS:
            raise ValueError(f"{k} generators give too many sign patterns")
        return np.array(list(itertools.product((-1.0, 1.0), repeat=k)))

    def contains(self, x, tol=FACET_TOL):
        return zonotope_to_hrep(self).contains(x, tol)


@dataclass(frozen=True, eq=False)
class HPolytope:
    """``{x : a_i^T x <= b_i}`` with unit-norm normals ``a_i`` (rows of ``normals``)."""

    normals: np.ndarray
    offsets: np.ndarray
    degenerate: bool = False

    def __post_init__(self):
        N = np.atleast_2d(np.asarray(self.normals, dtype=float))
        b = np.atleast_1d(np.asarray(self.offsets, dtype=float))
        if N.shape[0] != b.size:
            raise DimensionMismatch("one offset per facet is required")
        norms = np.linalg.norm(N, axis=1)
        if np.any(norms == 0):
            raise ValueError("zero facet normal")
        object.__setattr__(self, "normals", N / norms[:, None])
        object.__setattr__(self, "offsets", b / norms)

    @property
    def dim(self):
        return self.normals.shape[1]

    @property
    def n_facets(self):
        return self.normals.shape[0]

    def contains(self, x, tol=FACET_TOL):
        x = np.asarray(x, dtype=float)
        return np.all(x @ self.normals.T <= self.offsets + tol, axis=-1)

    def origin_interior(self, tol=FACET_TOL):
        return bool(np.all(self.offsets > tol))

    def support(self, a):
        a = _check_dim(self.dim, a)
        flat = a.reshape(-1, self.dim)
        out = np.array([self._support_lp(v)[0] for v in flat])
        return out.reshape(a.shape[:-1])

    def support_point(self, a):
        a = _check_dim(self.dim, a)
        flat = a.reshape(-1, self.dim)
        return np.array([self._support_lp(v)[1] for v in flat]).reshape(a.shape)

    def _support_lp(self, a):
        res = linprog(-a, A_ub=self.normals, b_ub=self.offsets,
                      bounds=[(None, None)] * self.dim, method="highs")
        if res.status == 3:
            raise UnboundedSet(f"support is unbounded in direction {a}")
        if res.status == 2:
            raise DegenerateSet("polytope is empty")
        if res.status != 0:
            raise DegenerateSet(f"support LP failed: {res.message}")
        return -res.fun, res.x

    def check_bounded(self):
        for a in np.vstack([np.eye(self.dim), -np.eye(self.dim)]):
            self._support_lp(a)

    def chebyshev(self):
        """Centre and radius of the largest Euclidean ball inside the polytope."""
        n = self.dim
        c = np.zeros(n + 1)
        c[-1] = -1.0
        A_ub = np.hstack([self.normals, np.ones((self.n_facets, 1))])
        res = linprog(c, A_ub=A_ub, b_ub=self.offsets,
                      bounds=[(None, None)] * n + [(None, None)], method="highs")
        if res.status == 3:
            raise UnboundedSet("polytope is unbounded")
        if res.status != 0:
            return np.full(n, np.nan), -np.inf
        return res.x[:n], float(res.x[-1])


@dataclass(frozen=True, eq=False)
class VPolytope:
    vertices: np.ndarray

    def __post_init__(self):
        V = np.atleast_2d(np.asarray(self.vertices, dtype=float))
        object.__setattr__(self, "vertices", V)

    @property
    def dim(self):
        return self.vertices.shape[1]

    def support(self, a):
        a = _check_dim(self.dim, a)
        return (a @ self.vertices.T).max(axis=-1)

    def support_point(self, a):
        a = _check_dim(self.dim, a)
        return self.vertices[np.argmax(a @ self.vertices.T, axis=-1)]

    def face_label(self, a):
        a = _check_dim(self.dim, a)
        return np.argmax(a @ self.vertices.T, axis=-1)

    def symmetrized(self):
        return VPolytope(np.vstack([self.vertices, -self.vertices]))


def support(S, a):
    """Support function ``h_S(a) = max_{x in S} a^T x``."""
    return S.support(a)


# ---------------------------------------------------------------------------
# constructions

def image_box(Bmat, box: HyperBox) -> Zonotope:
    """Image ``B U`` of a symmetric box as a zonotope."""
    Bmat = np.atleast_2d(np.asarray(Bmat, dtype=float))
    if Bmat.shape[1] != box.dim:
        raise DimensionMismatch(f"matrix has {Bmat.shape[1]} columns, box has dimension {box.dim}")
    return Zonotope(Bmat * box.half_widths)


def _nullvector(rows):
    """Unit vector orthogonal to the rows (assumed to have rank n-1), or None."""
    _, s, vh = np.linalg.svd(rows)
    if s[-1] <= 1e-12 * max(s[0], 1e-300):
        return None
    return vh[-1]


def _dedupe_directions(normals):
    kept = []
    for v in normals:
        if not any(abs(v @ w) >= 1.0 - 1e-12 for w in kept):
            kept.append(v)
    return np.array(kept)


def zonotope_to_hrep(Z: Zonotope, max_dim=4) -> HPolytope:
    """Facet description of a full-dimensional zonotope.

    Each facet normal is orthogonal to n-1 linearly independent generators;
    both orientations are kept and offsets are the support values.
    """
    G = Z.generators
    n = Z.dim
    if n > max_dim:
        raise ValueError(f"facet enumeration only supported for n <= {max_dim}")
    scale = np.abs(G).max() if G.size else 0.0
    G = G[:, np.linalg.norm(G, axis=0) > 1e-14 * max(scale, 1e-300)]
    if G.shape[1] == 0 or np.linalg.matrix_rank(G, tol=1e-12 * scale) < n:
        raise DegenerateZonotope("generators do not span the space")

    if n == 1:
        normals = np.array([[1.0]])
    else:
        cands = []
        for idx in itertools.combinations(range(G.shape[1]), n - 1):
            v = _nullvector(G[:, idx].T / np.linalg.norm(G[:, idx], axis=0)[:, None])
            if v is not None:
                # canonical orientation: first significant entry positive
                j = np.flatnonzero(np.abs(v) > 1e-12)[0]
                cands.append(v if v[j] > 0 else -v)
        normals = _dedupe_directions(cands)
    normals = np.vstack([normals, -normals])
    return HPolytope(normals, np.abs(normals @ G).sum(axis=1))


def remove_redundant(P: HPolytope, tol=FACET_TOL) -> HPolytope:
    """Drop facets whose removal leaves the support in their own normal unchanged."""
    N, b = P.normals, P.offsets
    keep = list(range(P.n_facets))
    for i in range(P.n_facets):
        others = [j for j in keep if j != i]
        if not others:
            continue
        res = linprog(-N[i], A_ub=N[others], b_ub=b[others],
                      bounds=[(None, None)] * P.dim, method="highs")
        if res.status == 0 and -res.fun <= b[i] + tol * (1.0 + abs(b[i])):
            keep.remove(i)
    return HPolytope(N[keep], b[keep], degenerate=P.degenerate)


def pontryagin_diff(outer: HPolytope, subtrahend) -> HPolytope:
    """Pontryagin difference ``{z : z + y in outer for all y in subtrahend}``.

    Exact for an H-described ``outer``: each offset shrinks by the support of
    the subtrahend in the facet normal.  A result without interior is
    returned unreduced with ``degenerate=True``.
    """
    if outer.dim != subtrahend.dim:
        raise DimensionMismatch(f"dimensions {outer.dim} and {subtrahend.dim} differ")
    b = outer.offsets - subtrahend.support(outer.normals)
    Z = HPolytope(outer.normals, b)
    if np.min(b) <= FACET_TOL:
        _, radius = Z.chebyshev()
        if radius <= FACET_TOL:
            return HPolytope(outer.normals, b, degenerate=True)
    return remove_redundant(Z)


def vertices(P: HPolytope, chunk=50_000) -> VPolytope:
    """Vertex enumeration by intersecting every n-subset of facets."""
    if P.degenerate:
        raise DegenerateSet("polytope has empty interior")
    P.check_bounded()
    N, b, n = P.normals, P.offsets, P.dim
    combos = itertools.combinations(range(P.n_facets), n)
    found = []
    while True:
        block = np.array(list(itertools.islice(combos, chunk)), dtype=int)
        if block.size == 0:
            break
        block = block.reshape(-1, n)
        M = N[block]
        ok = np.abs(np.linalg.det(M)) > 1e-10
        if not ok.any():
            continue
        x = np.linalg.solve(M[ok], b[block[ok]][..., None])[..., 0]
        feasible = np.all(x @ N.T <= b + FACET_TOL * (1.0 + np.abs(b)), axis=1)
        found.append(x[feasible])
    pts = np.vstack(found) if found else np.empty((0, n))
    if pts.shape[0] == 0:
        raise DegenerateSet("no vertices found")
    # deterministic order, then merge points closer than VERTEX_TOL
    pts = pts[np.lexsort(pts.T[::-1])]
    unique = []
    for p in pts:
        if not any(np.linalg.norm(p - q) <= VERTEX_TOL for q in unique):
            unique.append(p)
    V = np.array(unique)
    return VPolytope(V[np.lexsort(V.T[::-1])])


class InteriorCheck(NamedTuple):
    contained: bool
    facet: int
    slack: float


def contains_in_interior(inner, outer: HPolytope, margin=0.0) -> InteriorCheck:
    """Check ``h_inner(a_i) <= b_i - margin`` on every facet; report the tightest one."""
    if inner.dim != outer.dim:
        raise DimensionMismatch(f"dimensions {inner.dim} and {outer.dim} differ")
    slack = outer.offsets - inner.support(outer.normals)
    i = int(np.argmin(slack))
    return InteriorCheck(bool(slack[i] >= margin), i, float(slack[i]))


# ---------------------------------------------------------------------------
# P-norm extremals

def _candidate_points(S):
    if isinstance(S, VPolytope):
        return S.vertices
    if isinstance(S, HyperBox):
        return S.vertices().vertices
    if isinstance(S, Zonotope):
        return S.sign_patterns() @ S.generators.T
    raise TypeError(f"cannot enumerate extreme points of {type(S).__name__}")


def pnorm_max(S, M):
    """``max ||M x||_2`` over a polytope; attained at an extreme point.

    Returns ``(value, argmax)``.  Zonotopes are enumerated through all
    generator sign patterns, boxes through their corners.
    """
    pts = _candidate_points(S)
    vals = np.linalg.norm(pts @ np.asarray(M).T, axis=1)
    i = int(np.argmax(vals))
    return float(vals[i]), pts[i]


def pnorm_min_boundary(S: HPolytope, M):
    """``min ||M z||_2`` over the boundary of a polytope with 0 in its interior.

    For such a set the boundary minimum equals the radius of the largest
    P-ball (``P = M^T M``) centred at the origin and contained in the set,
    i.e. ``min_i b_i / ||a_i||_{P^-1}``.  The minimiser is the tangency point
    on the binding facet, which always lies inside that facet.
    Returns ``(value, argmin)``.
    """
    if not isinstance(S, HPolytope):
        raise TypeError("pnorm_min_boundary expects an HPolytope")
    if S.degenerate or not S.origin_interior():
        raise OriginNotInterior("0 is not an interior point; the boundary minimum would be 0")
    M = np.asarray(M, dtype=float)
    # P^{-1} a = M^{-1} M^{-T} a
    w = np.linalg.solve(M.T, S.normals.T)            # M^{-T} a_i, columns
    dual = np.linalg.norm(w, axis=0)                # ||a_i||_{P^-1}
    radii = S.offsets / dual
    i = int(np.argmin(radii))
    z = S.offsets[i] * np.linalg.solve(M, w[:, i]) / dual[i] ** 2
    return float(radii[i]), z


def pnorm_min_box_boundary(Bmat, box: HyperBox, M):
    """``min ||M B u||_2`` over the boundary of the input box itself.

    One coordinate is pinned to its bound and the rest solve a bounded
    least-squares problem; by symmetry only the positive bound is needed.
    The value is zero whenever ``B`` has a kernel vector, so for redundant
    actuators it carries no information.  Returns ``(value, argmin u)``.
    """
    Bmat = np.atleast_2d(np.asarray(Bmat, dtype=float))
    if Bmat.shape[1] != box.dim:
        raise DimensionMismatch(f"matrix has {Bmat.shape[1]} columns, box has dimension {box.dim}")
    MB = np.asarray(M, dtype=float) @ Bmat
    hw = box.half_widths
    best = (np.inf, None)
    for j in range(box.dim):
        free = [i for i in range(box.dim) if i != j]
        target = -MB[:, j] * hw[j]
        if free:
            res = lsq_linear(MB[:, free], target, bounds=(-hw[free], hw[free]),
                             method="bvls", tol=1e-14)
            u = np.empty(box.dim)
            u[free] = res.x
        else:
            u = np.empty(1)
        u[j] = hw[j]
        val = float(np.linalg.norm(MB @ u))
        if val < best[0]:
            best = (val, u)
    return best

"""Minimum time to steer ``x' = A x + z``, ``z in Omega``, from ``x0`` to the origin.

With ``p(s) = e^{-A^T s} eta`` the origin is reachable at time ``T`` iff

    phi(eta, T) = int_0^T h_Omega(p(s)) ds + eta^T x0 >= 0   for all unit eta.

``phi`` is nondecreasing in ``T`` (0 lies in ``Omega``), so ``T*`` is found by
bisection, with the inner minimisation over the sphere done by multistart
projected gradient on a composite Gauss-Legendre quadrature.  The result is
then polished: for a fixed ``eta`` the time ``tau(eta)`` at which the slack
vanishes is a lower bound on ``T*`` and ``T* = max tau``.  For a polytope the
optimal control is piecewise constant on vertices, so ``tau`` is computed
exactly from ``int e^{-A s} ds`` between switching instants.

Through the duality ``T_M* = min time with Omega = Z`` the same routine gives
the worst-case reach time after actuator loss.
"""

from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import scipy.linalg as sla
from scipy.optimize import brentq, lsq_linear, minimize

from .errors import (
    ControlOutOfRange,
    NotReachableWithinHorizon,
    NotResilientlyStabilizable,
    NotStabilizable,
)
from .geometry import HPolytope, HyperBox, VPolytope, Zonotope, vertices
from .linalg import as_square, pbh_controllable, spectrum
from .system import LinearSystem

DEFAULT_HORIZON = 1e3
GL_NODES = 8
GL_PANELS = 64
SWITCH_GRID = 4000
SAMPLE_GRID = 2000
TIE_TOL = 1e-9


def default_time_tol(t):
    return max(1e-4 * t, 1e-9)


# ---------------------------------------------------------------------------
# piecewise-constant signals

@dataclass(frozen=True, eq=False)
class ControlSignal:
    """Piecewise-constant signal: ``values[i]`` holds on ``[breakpoints[i], breakpoints[i+1])``."""

    breakpoints: np.ndarray
    values: np.ndarray

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        i = np.searchsorted(self.breakpoints, t, side="right") - 1
        i = np.clip(i, 0, len(self.values) - 1)
        return self.values[i]

    @property
    def switch_times(self):
        return self.breakpoints[1:-1]

    def sample(self, n=SAMPLE_GRID):
        """Values on a uniform grid of ``n + 1`` points plus every switching instant."""
        t = np.union1d(np.linspace(self.breakpoints[0], self.breakpoints[-1], n + 1), self.switch_times)
        return t, self(t)


def merge_breakpoints(*signals):
    return np.unique(np.concatenate([s.breakpoints for s in signals]))


# ---------------------------------------------------------------------------
# control sets

def _as_control_set(S):
    if isinstance(S, (Zonotope, VPolytope)):
        return S
    if isinstance(S, HyperBox):
        return S.vertices()
    if isinstance(S, HPolytope):
        return vertices(S)
    raise TypeError(f"unsupported control set {type(S).__name__}")


def _support_and_point(S, P):
    """``h_S`` and a maximiser for a stack of directions, sharing one product."""
    if isinstance(S, Zonotope):
        Y = P @ S.generators
        return np.abs(Y).sum(axis=-1), np.where(Y >= 0.0, 1.0, -1.0) @ S.generators.T
    Y = P @ S.vertices.T
    i = np.argmax(Y, axis=-1)
    return np.take_along_axis(Y, i[..., None], axis=-1)[..., 0], S.vertices[i]


def _tie_mask(S, p):
    """True where the maximiser of ``p^T x`` over S is not unique."""
    if isinstance(S, Zonotope):
        G = S.generators
        scale = np.linalg.norm(p, axis=-1)[..., None] * np.linalg.norm(G, axis=0)
        return np.any(np.abs(p @ G) <= TIE_TOL * scale, axis=-1)
    vals = p @ S.vertices.T
    top2 = np.sort(vals, axis=-1)[..., -2:]
    return top2[..., 1] - top2[..., 0] <= TIE_TOL * (np.abs(top2[..., 1]) + 1e-300)


def sphere_grid(n, count=None):
    """Deterministic unit directions: ±1, a circle, a Fibonacci sphere or seeded normals."""
    if n == 1:
        return np.array([[1.0], [-1.0]])
    if n == 2:
        th = 2 * np.pi * np.arange(count or 64) / (count or 64)
        return np.column_stack([np.cos(th), np.sin(th)])
    count = count or 512
    if n == 3:
        k = np.arange(count) + 0.5
        z = 1 - 2 * k / count
        r = np.sqrt(1 - z * z)
        th = np.pi * (1 + 5 ** 0.5) * k
        return np.column_stack([r * np.cos(th), r * np.sin(th), z])
    g = np.random.Generator(np.random.Philox(key=np.array([n, count], dtype=np.uint64)))
    X = g.standard_normal((count, n))
    return X / np.linalg.norm(X, axis=1)[:, None]


# ---------------------------------------------------------------------------
# adjoint integrals

class _Adjoint:
    """``p(s) = e^{-A^T s} eta`` and the exact reach integral for a polytope.

    The adjoint matrices are cached on a uniform grid of ``[0, t_max]``,
    used to locate switching instants before refining them.
    """

    def __init__(self, A, S, t_max, grid=SWITCH_GRID):
        self.A = A
        self.S = S
        n = A.shape[0]
        # expm([[-A, I], [0, 0]] t) has int_0^t e^{-A s} ds in its upper right block
        self._aug = np.zeros((2 * n, 2 * n))
        self._aug[:n, :n] = -A
        self._aug[:n, n:] = np.eye(n)
        self.grid = grid
        self.set_horizon(t_max)

    def set_horizon(self, t_max):
        self.t_max = float(t_max)
        self.t_grid = np.linspace(0.0, self.t_max, self.grid + 1)
        self.E_grid = self.E(self.t_grid)

    def E(self, t):
        """``e^{-A^T t}``, batched over an array of times."""
        t = np.asarray(t, dtype=float)
        if t.ndim == 0:
            return sla.expm(-self.A.T * float(t))
        return sla.expm(-self.A.T[None] * t.reshape(-1, 1, 1)).reshape(t.shape + self.A.shape)

    def p(self, eta, t):
        return self.E(t) @ eta

    def Phi(self, t):
        n = self.A.shape[0]
        t = np.asarray(t, dtype=float)
        if t.ndim == 0:
            return sla.expm(self._aug * float(t))[:n, n:]
        F = sla.expm(self._aug[None] * t.reshape(-1, 1, 1))
        return F[:, :n, n:].reshape(t.shape + (n, n))

    def breakpoints(self, eta, t_end, L=None, S=None):
        """Instants in ``(0, t_end)`` where the maximiser of ``q(t)^T x`` over S changes.

        ``q(t) = L p(t)`` (``L`` defaults to the identity, ``S`` to the control
        set).  Changes are located on the cached grid and refined with a
        root finder on ``q(t)^T (x_before - x_after)``.
        """
        S = self.S if S is None else S
        if t_end > self.t_max:
            self.set_horizon(t_end)
        m = int(np.searchsorted(self.t_grid, t_end, side="left"))
        t = np.append(self.t_grid[:m], t_end)
        P = np.concatenate([self.E_grid[:m] @ eta, (self.E(t_end) @ eta)[None]])
        Q = P if L is None else P @ L.T
        lab = S.face_label(Q)
        out = [0.0]
        for j in np.flatnonzero(lab[1:] != lab[:-1]):
            d = S.support_point(Q[j]) - S.support_point(Q[j + 1])

            def f(s, d=d):
                q = self.E(s) @ eta
                return float((q if L is None else L @ q) @ d)

            lo, hi = t[j], t[j + 1]
            flo, fhi = f(lo), f(hi)
            if flo * fhi < 0:
                out.append(brentq(f, lo, hi, xtol=1e-13 * max(t_end, 1e-300), rtol=1e-15))
            else:
                out.append(lo if abs(flo) <= abs(fhi) else hi)
        out.append(t_end)
        return np.unique(np.array(out))

    def pieces(self, eta, t_end):
        """Switching instants and the vertex used on each interval."""
        bp = self.breakpoints(eta, t_end)
        mid = 0.5 * (bp[1:] + bp[:-1])
        verts = self.S.support_point(self.p(eta, mid))
        return bp, np.atleast_2d(verts)

    def tau(self, eta, x0, t_max):
        """First time at which ``int_0^t h(p) ds = -eta^T x0``, plus the slack gradient there.

        Returns ``(tau, grad_I)`` with ``grad_I = int_0^tau e^{-A s} z*(s) ds``,
        or ``(inf, None)`` when the slack is still negative at ``t_max``.
        """
        target = -float(eta @ x0)
        if target <= 0.0:
            return 0.0, np.zeros_like(eta)
        bp, V = self.pieces(eta, t_max)
        Phi = self.Phi(bp)
        contrib = np.einsum("kij,kj->ki", Phi[1:] - Phi[:-1], V)     # int over piece of e^{-As} v
        vals = contrib @ eta
        cum = np.concatenate([[0.0], np.cumsum(vals)])
        if cum[-1] < target:
            return np.inf, None
        k = int(np.searchsorted(cum, target, side="left")) - 1
        k = max(k, 0)
        a, v, base = bp[k], V[k], cum[k]
        Phi_a = Phi[k]

        def f(t):
            return base + eta @ ((self.Phi(t) - Phi_a) @ v) - target

        if f(bp[k + 1]) <= 0.0:
            t = bp[k + 1]
        else:
            t = brentq(f, a, bp[k + 1], xtol=1e-14 * max(bp[k + 1], 1.0), rtol=1e-15, maxiter=200)
        grad = contrib[:k].sum(axis=0) + (self.Phi(t) - Phi_a) @ v
        return float(t), grad


class _Quadrature:
    """Composite Gauss-Legendre rule on ``[0, T]`` with the adjoint matrices at the nodes."""

    def __init__(self, A, S, T, panels=GL_PANELS):
        x, w = np.polynomial.legendre.leggauss(GL_NODES)
        edges = np.linspace(0.0, T, panels + 1)
        half = 0.5 * np.diff(edges)
        mids = 0.5 * (edges[1:] + edges[:-1])
        self.nodes = (mids[:, None] + half[:, None] * x).ravel()
        self.weights = (half[:, None] * w).ravel()
        self.E = sla.expm(-A.T[None] * self.nodes[:, None, None])
        self.S = S
        K, n = self.E.shape[:2]
        self._E_flat = self.E.reshape(K * n, n)
        # weighted transposes, stacked so that sum_k w_k E_k^T z_k is one matmul
        self._EwT = (self.weights[:, None, None] * self.E).reshape(K * n, n)

    def phi(self, etas, x0):
        """Slack and gradient for a stack of directions, shape ``(m, n)``."""
        m = etas.shape[0]
        K, n = self.E.shape[:2]
        P = (self._E_flat @ etas.T).reshape(K, n, m).transpose(2, 0, 1)
        h, Zs = _support_and_point(self.S, P)
        val = h @ self.weights + etas @ x0
        grad = Zs.reshape(m, K * n) @ self._EwT + x0
        return val, grad


def _minimize_sphere(quad: _Quadrature, x0, starts, max_iter=200, gtol=1e-8):
    """Projected gradient with Armijo backtracking, run on all starts at once.

    Stops early once a negative slack is found: that direction already
    certifies that the origin is out of reach at this time.
    """
    eta = starts / np.linalg.norm(starts, axis=1)[:, None]
    val, grad = quad.phi(eta, x0)
    step = np.full(len(eta), 1.0 / max(np.abs(grad).max(), 1e-300))
    scale = np.abs(x0).sum() + 1e-300
    for _ in range(max_iter):
        if val.min() < 0.0:
            break
        tang = grad - np.sum(grad * eta, axis=1)[:, None] * eta
        gnorm = np.linalg.norm(tang, axis=1)
        active = gnorm > gtol * scale
        if not active.any():
            break
        trial = eta - step[:, None] * tang
        trial /= np.linalg.norm(trial, axis=1)[:, None]
        tval, tgrad = quad.phi(trial, x0)
        ok = (tval <= val - 1e-4 * step * gnorm ** 2) & active
        eta[ok], val[ok], grad[ok] = trial[ok], tval[ok], tgrad[ok]
        step = np.where(ok, step * 2.0, step * 0.5)
        if np.all(step[active] < 1e-18):
            break
    i = int(np.argmin(val))
    return float(val[i]), eta[i]


# ---------------------------------------------------------------------------
# results

@dataclass
class MinTimeResult:
    """Outcome of a minimum-time computation.

    ``signal`` is the optimal control in the set ``Omega`` (a point of the
    control set per interval); ``terminal_error`` is ``||x(T*)||`` from an
    RK4 replay of that signal.
    """

    t_star: float
    eta_star: np.ndarray
    converged: bool
    bracket: tuple
    time_tol: float
    signal: Optional[ControlSignal] = None
    terminal_error: float = float("nan")
    degenerate: bool = False
    iterations: int = 0
    notes: list = field(default_factory=list)

    @property
    def switch_times(self):
        return np.array([]) if self.signal is None else self.signal.switch_times

    @property
    def control_samples(self):
        return self.signal.sample() if self.signal is not None else (np.array([0.0]), None)


def _zero_result(n):
    eta = np.zeros(n)
    eta[0] = 1.0
    sig = ControlSignal(np.array([0.0, 0.0]), np.zeros((1, n)))
    return MinTimeResult(0.0, eta, True, (0.0, 0.0), 0.0, sig, 0.0)


def min_time(A, control_set, x0, *, time_tol=None, horizon=DEFAULT_HORIZON, direction_grid=None,
             t_guess=None, verify=True) -> MinTimeResult:
    """Minimum time to reach the origin from ``x0`` with ``z(t) in control_set``.

    Args:
        A: state matrix.
        control_set: polytope containing 0 (zonotope, vertex or facet form, or box).
        x0: initial state.
        time_tol: bisection stopping width; defaults to ``1e-4`` times the
            current midpoint, floored at ``1e-9``.
        horizon: largest time searched before giving up.
        direction_grid: number of starting directions on the sphere.
        t_guess: first upper bracket to try.
        verify: replay the optimal signal with RK4 and record the terminal error.

    Raises:
        NotReachableWithinHorizon: the slack stays negative up to ``horizon``.
    """
    A = as_square(A)
    x0 = np.asarray(x0, dtype=float).reshape(-1)
    n = A.shape[0]
    if x0.size != n:
        raise ValueError(f"x0 has {x0.size} entries, expected {n}")
    if not np.any(x0):
        return _zero_result(n)
    S = _as_control_set(control_set)
    grid = sphere_grid(n, direction_grid)
    tol_of = (lambda t: time_tol) if time_tol is not None else default_time_tol

    warm = [-x0 / np.linalg.norm(x0)]

    def slack(T):
        quad = _Quadrature(A, S, T)
        vals, _ = quad.phi(grid, x0)
        order = np.argsort(vals)[: min(8, len(grid))]
        starts = np.vstack([grid[order], warm[0][None]])
        val, eta = _minimize_sphere(quad, x0, starts)
        return val, eta

    # bracket: the slack at T = 0 is -||x0|| < 0
    lo, hi = 0.0, float(t_guess) if t_guess else min(1.0, horizon)
    eta_lo = warm[0]
    iters = 0
    while True:
        iters += 1
        val, eta = slack(hi)
        if val >= 0.0:
            break
        lo, eta_lo = hi, eta
        warm[0] = eta
        if hi >= horizon:
            raise NotReachableWithinHorizon(f"origin not reached within horizon {horizon:g}")
        hi = min(2.0 * hi, horizon)

    while hi - lo > tol_of(0.5 * (lo + hi)):
        iters += 1
        mid = 0.5 * (lo + hi)
        val, eta = slack(mid)
        if val >= 0.0:
            hi = mid
        else:
            lo, eta_lo = mid, eta
            warm[0] = eta

    # polish: tau(eta) <= T* for every eta; climb tau from the best direction
    t_max = min(max(hi * 1.05, hi + 10 * tol_of(hi)), max(horizon, hi * 1.05))
    adj = _Adjoint(A, S, t_max)
    eta, T, converged, notes = _polish(adj, x0, eta_lo, t_max)
    if not np.isfinite(T) or T < lo - 10 * tol_of(lo):
        notes.append("polish failed; using the bisection bracket")
        T, eta, converged = hi, eta_lo, False
    if T > hi:
        # tau(eta) is a certified lower bound, so the coarse bracket was low
        notes.append(f"bisection bracket raised from {hi:.9g} to {T:.9g}")
        hi = T

    res = MinTimeResult(float(T), eta / np.linalg.norm(eta), bool(converged), (lo, hi),
                        float(tol_of(T)), iterations=iters, notes=notes)
    bp, V = adj.pieces(res.eta_star, res.t_star)
    res.signal = ControlSignal(bp, V)
    ts = np.linspace(0.0, res.t_star, SAMPLE_GRID + 1)
    res.degenerate = bool(np.mean(_tie_mask(S, adj.p(res.eta_star, ts))) > 0.01)
    if res.degenerate:
        notes.append("optimal control is not unique on a set of positive measure")
    if verify:
        traj = simulate_linear(A, res.signal, x0, res.t_star, step=min(res.time_tol, res.t_star / 4000))
        res.terminal_error = float(np.linalg.norm(traj.states[-1]))
    return res


def _polish(adj, x0, eta0, t_max, max_iter=200):
    """Maximise ``tau`` over directions, starting from ``eta0``.

    ``tau`` is homogeneous of degree 0, so it is maximised over all of R^n
    with BFGS; its gradient follows from the implicit function theorem:
    ``grad tau = -(int_0^tau e^{-A s} z*(s) ds + x0) / h(p(tau))``.
    """
    notes = []
    eta0 = eta0 / np.linalg.norm(eta0)
    T0, _ = adj.tau(eta0, x0, t_max)
    if not np.isfinite(T0) or T0 <= 0:
        return eta0, T0, False, notes
    best = [T0, eta0]

    def fun(y):
        nrm = np.linalg.norm(y)
        if nrm == 0:
            return 0.0, np.zeros_like(y)
        T, g = adj.tau(y / nrm, x0, t_max)
        if not np.isfinite(T):
            # beyond the horizon: the bracket is wrong, keep the certificate
            T, g = adj.t_max, None
        if T > best[0]:
            best[0], best[1] = T, y / nrm
        if g is None or T <= 0:
            return -T / T0, np.zeros_like(y)
        h = float(adj.S.support(adj.p(y / nrm, T)))
        grad = -(g / nrm + x0 / nrm) / max(h, 1e-300)
        grad -= (grad @ y) * y / nrm ** 2
        return -T / T0, -grad / T0

    res = minimize(fun, eta0, jac=True, method="BFGS",
                   options={"gtol": 1e-12, "maxiter": max_iter, "xrtol": 1e-14})
    # status 2 is a line-search stall at round-off level, accepted when stationary
    ok = res.status == 0 or (res.status == 2 and np.linalg.norm(res.jac) < 1e-6)
    if not ok:
        notes.append(f"direction polish: {res.message}")
    return best[1], best[0], bool(ok), notes


# ---------------------------------------------------------------------------
# simulation

@dataclass
class Trajectory:
    times: np.ndarray
    states: np.ndarray

    @property
    def terminal_error(self):
        return float(np.linalg.norm(self.states[-1]))


def _rk4_maps(A, h):
    """Exact RK4 update for ``x' = A x + f`` with constant ``f``: ``x+ = R x + S f``."""
    n = A.shape[0]
    H = h * A
    I = np.eye(n)
    H2 = H @ H
    H3 = H2 @ H
    R = I + H + H2 / 2 + H3 / 6 + H3 @ H / 24
    Sm = h * (I + H / 2 + H2 / 6 + H3 / 24)
    return R, Sm


def simulate_linear(A, forcing: ControlSignal, x0, T, step=None):
    """RK4 for ``x' = A x + f(t)`` with piecewise-constant ``f``, restarting at breakpoints."""
    A = as_square(A)
    x = np.asarray(x0, dtype=float).copy()
    if T <= 0:
        return Trajectory(np.array([0.0]), x[None])
    step = step or T / 4000
    cuts = np.unique(np.concatenate([[0.0], forcing.breakpoints[(forcing.breakpoints > 0) & (forcing.breakpoints < T)], [T]]))
    times, states = [0.0], [x.copy()]
    for a, b in zip(cuts[:-1], cuts[1:]):
        if b - a <= 0:
            continue
        k = int(np.ceil((b - a) / step))
        h = (b - a) / k
        R, Sm = _rk4_maps(A, h)
        f = forcing(0.5 * (a + b))
        c = Sm @ f
        for _ in range(k):
            x = R @ x + c
        times.append(b)
        states.append(x.copy())
    return Trajectory(np.array(times), np.array(states))


def simulate(sys: LinearSystem, u: ControlSignal, w: Optional[ControlSignal], x0, T, step=None):
    """RK4 replay of ``x' = A x + B u + C w``; returns the trajectory at breakpoints."""
    sigs = [u] + ([w] if w is not None else [])
    bp = merge_breakpoints(*sigs)
    vals = sys.B @ u(0.5 * (bp[1:] + bp[:-1])).T
    if w is not None and sys.p:
        vals = vals + sys.C @ w(0.5 * (bp[1:] + bp[:-1])).T
    return simulate_linear(sys.A, ControlSignal(bp, vals.T), x0, T, step)


# ---------------------------------------------------------------------------
# system-level entry points

def check_nominal_stabilizable(sys: LinearSystem, tol_eig=None):
    spec = spectrum(sys.A, tol_eig)
    if not spec.semistable:
        raise NotStabilizable("A has an eigenvalue with positive real part")
    if not pbh_controllable(sys.A, sys.B_bar):
        raise NotStabilizable("(A, B_bar) fails the PBH controllability test")


def nominal_reach_time(sys: LinearSystem, x0, **kw) -> MinTimeResult:
    """``T_N*``: minimum time with every actuator available (control set ``B_bar U_bar``)."""
    check_nominal_stabilizable(sys)
    return min_time(sys.A, sys.nominal_set, x0, **kw)


def malfunction_reach_time(sys: LinearSystem, Z, x0, verdict=None, **kw) -> MinTimeResult:
    """``T_M*``: worst case over the lost inputs, computed as the minimum time with controls in Z.

    ``verdict`` is an optional stabilizability verdict; anything but a
    positive one raises :class:`NotResilientlyStabilizable`.
    """
    if verdict is not None and getattr(verdict, "stabilizable", verdict) not in ("yes", True):
        raise NotResilientlyStabilizable("the system is not resiliently stabilizable")
    if isinstance(Z, HPolytope) and Z.degenerate:
        raise NotResilientlyStabilizable("Z has empty interior")
    return min_time(sys.A, Z, x0, **kw)


@dataclass
class Reconstruction:
    u: ControlSignal
    w: Optional[ControlSignal]
    z: ControlSignal
    max_violation: float
    residual: float


def reconstruct_controls(result: MinTimeResult, sys: LinearSystem, malfunction=True, tol=1e-6) -> Reconstruction:
    """Actuator signals behind an optimal control of the dual problem.

    Nominal: ``u_bar = h * sign(B_bar^T p)``.  Malfunction: the adversary
    plays ``w = -h_W * sign(C^T p)`` and the controller solves
    ``B u = z - C w`` with ``u`` in its box (bounded least squares).
    """
    eta, T = result.eta_star, result.t_star
    adj = _Adjoint(sys.A, sys.nominal_set, max(T, 1e-300))

    def p_at(t):
        return adj.p(eta, t)

    if not malfunction:
        box = sys.U_bar
        bp = adj.breakpoints(eta, T, L=sys.B_bar.T, S=box)
        mids = 0.5 * (bp[1:] + bp[:-1])
        ub = box.support_point(p_at(mids) @ sys.B_bar)
        u = ControlSignal(bp, np.atleast_2d(ub))
        return Reconstruction(u, None, ControlSignal(bp, (sys.B_bar @ u.values.T).T), 0.0, 0.0)

    W = sys.W
    z_sig = result.signal
    if W is None:
        w_bp = np.array([0.0, T])
    else:
        w_bp = adj.breakpoints(eta, T, L=-sys.C.T, S=W)
    bp = np.unique(np.concatenate([z_sig.breakpoints, w_bp]))
    bp = bp[(bp >= 0) & (bp <= T)]
    mids = 0.5 * (bp[1:] + bp[:-1])
    z = z_sig(mids)
    if W is None:
        w = np.zeros((len(mids), 0))
    else:
        w = W.support_point(-(p_at(mids) @ sys.C))
    hw = sys.U.half_widths
    us, worst, resid = [], 0.0, 0.0
    for ti, zi, wi in zip(mids, z, w):
        rhs = zi - sys.C @ wi
        sol = lsq_linear(sys.B, rhs, bounds=(-hw - 1e-300, hw + 1e-300), method="bvls", tol=1e-14)
        r = float(np.linalg.norm(sys.B @ sol.x - rhs))
        scale = max(np.linalg.norm(rhs), np.abs(sys.B).max())
        if r > tol * scale:
            raise ControlOutOfRange(f"no admissible u at t = {ti:.6g} (residual {r:.3e})", time=float(ti))
        viol = float(np.max(np.abs(sol.x) - hw))
        if viol > tol:
            raise ControlOutOfRange(f"u leaves its box at t = {ti:.6g}", time=float(ti))
        worst, resid = max(worst, viol), max(resid, r)
        us.append(np.clip(sol.x, -hw, hw))
    return Reconstruction(ControlSignal(bp, np.array(us)),
                          ControlSignal(bp, w) if W is not None else None,
                          ControlSignal(bp, z), max(worst, 0.0), resid)

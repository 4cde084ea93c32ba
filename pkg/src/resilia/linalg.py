"""Small dense linear algebra: spectra, Lyapunov equations, Cholesky, expm.

All routines target n <= 10 and favour transparency over speed.
"""

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla

from .errors import NotHurwitz, NotSPD


def as_square(A) -> np.ndarray:
    A = np.atleast_2d(np.asarray(A, dtype=float))
    if A.ndim != 2 or A.shape[0] != A.shape[1] or A.shape[0] < 1:
        raise ValueError(f"expected a square matrix, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise ValueError("matrix has non-finite entries")
    return A


def default_tol_eig(A) -> float:
    """Scale-relative threshold used to decide the sign of Re(lambda)."""
    return 1e-9 * (1.0 + np.linalg.norm(A, np.inf))


@dataclass(frozen=True)
class Spectrum:
    """Eigenvalues of A plus the real eigenvectors of A^T.

    ``real_eigenvectors`` holds ``(lambda, v)`` pairs with ``A.T @ v = lambda v``
    and ``||v|| = 1``.  Only one orientation of each vector is stored.
    """

    eigenvalues: np.ndarray
    real_eigenvectors: list = field(default_factory=list)
    tol_eig: float = 0.0

    @property
    def hurwitz(self) -> bool:
        return bool(np.all(self.eigenvalues.real < -self.tol_eig))

    @property
    def marginal(self) -> bool:
        return bool(np.all(np.abs(self.eigenvalues.real) <= self.tol_eig))

    @property
    def semistable(self) -> bool:
        return bool(np.all(self.eigenvalues.real <= self.tol_eig))


def spectrum(A, tol_eig=None) -> Spectrum:
    A = as_square(A)
    if tol_eig is None:
        tol_eig = default_tol_eig(A)
    n = A.shape[0]
    lam = np.linalg.eigvals(A)
    order = np.lexsort((lam.imag, lam.real))
    lam = lam[order]

    real = np.sort(lam[np.abs(lam.imag) <= tol_eig].real)
    # group numerically repeated real eigenvalues
    clusters = []
    for value in real:
        if clusters and abs(value - clusters[-1][-1]) <= max(tol_eig, 1e-7 * (1 + abs(value))):
            clusters[-1].append(value)
        else:
            clusters.append([value])

    vectors = []
    for cluster in clusters:
        mu = float(np.mean(cluster))
        _, s, vh = np.linalg.svd(A.T - mu * np.eye(n))
        null = vh[s <= tol_eig]
        if null.shape[0] == 0:
            # round-off can push the smallest singular value above tol_eig
            null = vh[-1:]
        for v in null:
            v = v / np.linalg.norm(v)
            # refine the eigenvalue with the Rayleigh quotient
            vectors.append((float(v @ A.T @ v), v))
    return Spectrum(eigenvalues=lam, real_eigenvectors=vectors, tol_eig=float(tol_eig))


def cholesky_factor(P) -> np.ndarray:
    """Return upper-triangular M with ``P = M.T @ M``, so ``||x||_P = ||M x||``."""
    P = as_square(P)
    if not np.allclose(P, P.T, rtol=1e-10, atol=1e-12 * np.abs(P).max()):
        raise NotSPD("matrix is not symmetric")
    try:
        L = np.linalg.cholesky(0.5 * (P + P.T))
    except np.linalg.LinAlgError as exc:
        raise NotSPD("Cholesky pivot is not positive") from exc
    if np.any(np.diag(L) <= 0):
        raise NotSPD("Cholesky pivot is not positive")
    return L.T


def is_spd(P) -> bool:
    try:
        cholesky_factor(P)
    except NotSPD:
        return False
    return True


def solve_lyapunov(A, Q, tol_eig=None) -> np.ndarray:
    """Solve ``A^T P + P A = -Q`` for a Hurwitz ``A`` and SPD ``Q``.

    Uses the vectorised (Kronecker) form, which is exact enough for the
    n <= 10 systems handled here.
    """
    A = as_square(A)
    Q = as_square(Q)
    if A.shape != Q.shape:
        raise ValueError(f"A is {A.shape} but Q is {Q.shape}")
    cholesky_factor(Q)
    spec = spectrum(A, tol_eig)
    if not spec.hurwitz:
        raise NotHurwitz(f"A is not Hurwitz: max Re(lambda) = {spec.eigenvalues.real.max():.3e}")
    n = A.shape[0]
    I = np.eye(n)
    # row-major vec: vec(A^T P) = (A^T kron I) vec(P), vec(P A) = (I kron A^T) vec(P)
    K = np.kron(A.T, I) + np.kron(I, A.T)
    P = np.linalg.solve(K, -Q.reshape(-1)).reshape(n, n)
    P = 0.5 * (P + P.T)
    # one step of iterative refinement keeps the residual at round-off level
    R = A.T @ P + P @ A + Q
    dP = np.linalg.solve(K, -R.reshape(-1)).reshape(n, n)
    return P + 0.5 * (dP + dP.T)


def lyapunov_residual(A, P, Q) -> float:
    return float(np.linalg.norm(A.T @ P + P @ A + Q, 2))


def expm(A, t=1.0) -> np.ndarray:
    """Matrix exponential ``e^{A t}`` (scaling and squaring, via SciPy).

    ``t`` may be an array, in which case a stack of exponentials is returned.
    """
    A = as_square(A)
    t = np.asarray(t, dtype=float)
    if t.ndim == 0:
        return sla.expm(A * float(t))
    return sla.expm(A[None, :, :] * t.reshape(-1, 1, 1)).reshape(t.shape + A.shape)


def pbh_controllable(A, Bmat, tol=None) -> bool:
    """Popov-Belevitch-Hautus test: rank [A - lambda I, B] = n at every eigenvalue."""
    A = as_square(A)
    Bmat = np.asarray(Bmat, dtype=float).reshape(A.shape[0], -1)
    n = A.shape[0]
    scale = 1.0 + np.linalg.norm(A, 2) + np.linalg.norm(Bmat, 2)
    tol = 1e-9 * scale if tol is None else tol
    for lam in np.linalg.eigvals(A):
        M = np.hstack([A - lam * np.eye(n), Bmat.astype(complex)])
        if np.linalg.svd(M, compute_uv=False)[-1] <= tol:
            return False
    return True

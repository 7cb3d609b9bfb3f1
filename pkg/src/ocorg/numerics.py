"""Dense linear algebra kernels: solves, Lyapunov certificates, decay envelopes."""

import warnings
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import NotSchurStable, NotSymmetric, SingularMatrix

PIVOT_TOL = 1e-12
SYMMETRY_TOL = 1e-10


def as_matrix(a, name="matrix"):
    """Return ``a`` as a finite 2-D float array (scalars become 1x1)."""
    m = np.atleast_2d(np.asarray(a, dtype=float))
    if m.ndim != 2:
        raise ValueError(f"{name} must be 2-D, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ValueError(f"{name} contains non-finite entries")
    return m


def solve_linear(A, b, pivot_tol=PIVOT_TOL):
    """Solve ``A X = b`` by LU with partial pivoting.

    Raises :class:`SingularMatrix` if any pivot has magnitude ``<= pivot_tol``.
    A 1-D ``b`` gives a 1-D result.
    """
    A = as_matrix(A, "A")
    b_arr = np.asarray(b, dtype=float)
    vector = b_arr.ndim == 1
    B = b_arr.reshape(-1, 1) if vector else as_matrix(b_arr, "b")
    n = A.shape[0]
    if A.shape != (n, n) or B.shape[0] != n:
        raise ValueError(f"incompatible shapes {A.shape} and {B.shape}")

    with warnings.catch_warnings():
        # exact-zero pivots are reported below as SingularMatrix
        warnings.simplefilter("ignore", scipy.linalg.LinAlgWarning)
        lu, piv = scipy.linalg.lu_factor(A, check_finite=False)
    pivots = np.abs(np.diag(lu))
    if pivots.size and pivots.min() <= pivot_tol:
        raise SingularMatrix(f"pivot {pivots.min():.3e} below tolerance {pivot_tol:g}")
    X = scipy.linalg.lu_solve((lu, piv), B, check_finite=False)
    return X.ravel() if vector else X


def solve_discrete_lyapunov(A):
    """Solve ``A^T P A - P = -I`` through the vectorized ``n^2 x n^2`` system.

    P is returned only if it is positive definite, which certifies that A is
    Schur stable. Otherwise :class:`NotSchurStable` is raised.
    """
    A = as_matrix(A, "A")
    n = A.shape[0]
    if A.shape != (n, n):
        raise ValueError("A must be square")
    # vec(A^T P A) = (A^T kron A^T) vec(P) for column-major vec
    M = np.kron(A.T, A.T) - np.eye(n * n)
    rhs = -np.eye(n).ravel(order="F")
    try:
        p = solve_linear(M, rhs)
    except SingularMatrix as exc:
        raise NotSchurStable("Lyapunov system is singular") from exc
    P = p.reshape((n, n), order="F")
    P = 0.5 * (P + P.T)
    if np.linalg.eigvalsh(P)[0] <= 0.0:
        raise NotSchurStable("Lyapunov solution is not positive definite")
    return P


def is_schur_stable(A):
    try:
        solve_discrete_lyapunov(A)
    except NotSchurStable:
        return False
    return True


def sym_eig_extremes(S):
    """Smallest and largest eigenvalue of a symmetric matrix."""
    S = as_matrix(S, "S")
    scale = max(1.0, float(np.abs(S).max(initial=0.0)))
    if S.shape[0] != S.shape[1] or np.abs(S - S.T).max(initial=0.0) > SYMMETRY_TOL * scale:
        raise NotSymmetric("matrix is not symmetric")
    w = np.linalg.eigvalsh(0.5 * (S + S.T))
    return float(w[0]), float(w[-1])


def spectral_norm(M):
    """Induced 2-norm, ``sqrt(lambda_max(M^T M))``."""
    M = as_matrix(M, "M")
    return float(np.sqrt(max(sym_eig_extremes(M.T @ M)[1], 0.0)))


@dataclass(frozen=True)
class DecayEnvelope:
    """Constants with ``||A^t|| <= c * sigma**t`` for all ``t >= 0``."""

    c: float
    sigma: float

    def bound(self, t):
        return self.c * self.sigma ** t


def schur_decay_envelope(A):
    """Decay envelope from the Lyapunov function ``V(x) = x^T P x``.

    ``V(Ax) = V(x) - |x|^2 <= (1 - 1/lambda_max(P)) V(x)`` gives
    ``sigma = sqrt(1 - 1/lambda_max)`` and ``c = sqrt(lambda_max/lambda_min)``.
    """
    P = solve_discrete_lyapunov(A)
    lo, hi = sym_eig_extremes(P)
    c = max(1.0, float(np.sqrt(hi / lo)))
    sigma = float(np.sqrt(max(1.0 - 1.0 / hi, 0.0)))
    return DecayEnvelope(c=c, sigma=min(max(sigma, 1e-9), 1.0 - 1e-16))

"""Convex polytopes ``{z : H z <= h}`` and the LP/QP primitives built on them.

All sets handled by the controller stack (output constraints, steady-state
input sets, the contractive admissible set) live in halfspace form. Linear
programs are solved with a dense two-phase tableau simplex using Bland's rule;
Euclidean projection uses a primal active-set method.
"""

import functools
from typing import NamedTuple

import numpy as np

from .errors import DimensionMismatch, Infeasible, InvalidBeta, IterationLimit, Unbounded

FEAS_TOL = 1e-9
_RC_TOL = 1e-10
_PIVOT_TOL = 1e-10


class Polytope:
    """Halfspace representation ``{z : H z <= h}``.

    Rows with a zero normal and nonnegative offset are dropped at construction;
    a zero-normal row with negative offset is kept and marks the empty set.
    Instances are treated as immutable.
    """

    def __init__(self, H, h, dim=None):
        H = np.asarray(H, dtype=float)
        h = np.asarray(h, dtype=float).ravel()
        if H.size == 0:
            if dim is None:
                dim = H.shape[1] if H.ndim == 2 else 0
            H = np.zeros((0, dim))
        H = np.atleast_2d(H)
        if H.shape[0] != h.shape[0]:
            raise DimensionMismatch(f"H has {H.shape[0]} rows but h has {h.shape[0]}")
        if dim is not None and H.shape[1] != dim:
            raise DimensionMismatch(f"H has {H.shape[1]} columns, expected {dim}")
        if not (np.all(np.isfinite(H)) and np.all(np.isfinite(h))):
            raise ValueError("polytope data must be finite")
        zero = np.all(H == 0.0, axis=1)
        keep = ~(zero & (h >= 0.0))
        self.H = H[keep].copy()
        self.h = h[keep].copy()
        self.H.flags.writeable = False
        self.h.flags.writeable = False

    @property
    def dim(self):
        return self.H.shape[1]

    @property
    def n_rows(self):
        return self.H.shape[0]

    @classmethod
    def box(cls, lower, upper):
        lower = np.atleast_1d(np.asarray(lower, dtype=float))
        upper = np.atleast_1d(np.asarray(upper, dtype=float))
        eye = np.eye(lower.size)
        return cls(np.vstack([eye, -eye]), np.concatenate([upper, -lower]))

    @classmethod
    def from_dict(cls, data):
        H = np.asarray(data["H"], dtype=float)
        return cls(H, data["h"], dim=H.shape[1] if H.ndim == 2 else None)

    def to_dict(self):
        return {"H": self.H.tolist(), "h": self.h.tolist()}

    @functools.cached_property
    def interior_point(self):
        return chebyshev_center(self)[0]

    def __repr__(self):
        return f"Polytope(dim={self.dim}, rows={self.n_rows})"


class LPResult(NamedTuple):
    optimum: float
    maximizer: np.ndarray


def _check_dim(P, z):
    z = np.asarray(z, dtype=float).ravel()
    if z.size != P.dim:
        raise DimensionMismatch(f"vector of length {z.size} for polytope of dim {P.dim}")
    return z


def _pivot(T, i, j):
    T[i] /= T[i, j]
    col = T[:, j].copy()
    col[i] = 0.0
    T -= np.outer(col, T[i])


def _run_simplex(T, basis, n_enter, max_iter):
    """Maximize with Bland's rule; last tableau row holds reduced costs."""
    m = T.shape[0] - 1
    for _ in range(max_iter):
        candidates = np.flatnonzero(T[-1, :n_enter] > _RC_TOL)
        if candidates.size == 0:
            return
        j = candidates[0]
        col = T[:m, j]
        rows = np.flatnonzero(col > _PIVOT_TOL)
        if rows.size == 0:
            raise Unbounded("objective is unbounded over the polytope")
        ratios = T[rows, -1] / col[rows]
        best = ratios.min()
        ties = rows[ratios <= best + 1e-12 * (1.0 + abs(best))]
        i = ties[np.argmin(basis[ties])]
        _pivot(T, i, j)
        basis[i] = j
    raise IterationLimit("simplex exceeded its pivot budget", operation="lp_solve")


def lp_solve(objective, P):
    """Maximize ``objective @ z`` over ``P``.

    Two-phase dense simplex with Bland's anti-cycling rule on the standard form
    ``H z+ - H z- + s = h``. The final vertex is recomputed from its basis by a
    direct solve, so it is accurate to roundoff rather than to the accumulated
    tableau error. Raises :class:`Infeasible` or :class:`Unbounded`.
    """
    c = _check_dim(P, objective)
    d, k = P.dim, P.n_rows
    H, h = P.H, P.h
    norms = np.linalg.norm(H, axis=1)
    if np.any(norms == 0.0):
        raise Infeasible("polytope contains a contradictory row")
    if k == 0:
        if np.any(c != 0.0):
            raise Unbounded("objective is unbounded over the whole space")
        return LPResult(0.0, np.zeros(d))
    Hn = H / norms[:, None]
    hn = h / norms

    flip = hn < 0.0
    sign = np.where(flip, -1.0, 1.0)
    n_art = int(flip.sum())
    n_struct = 2 * d + k
    A_eq = np.hstack([Hn, -Hn, np.eye(k)]) * sign[:, None]
    b_eq = hn * sign

    T = np.zeros((k + 1, n_struct + n_art + 1))
    T[:k, :n_struct] = A_eq
    T[:k, -1] = b_eq
    basis = np.arange(2 * d, 2 * d + k)
    art_rows = np.flatnonzero(flip)
    T[art_rows, n_struct + np.arange(n_art)] = 1.0
    basis[art_rows] = n_struct + np.arange(n_art)
    max_iter = 50 * (k + n_struct + 10)

    active = np.arange(k)
    if n_art:
        T[-1, :] = T[art_rows].sum(axis=0)
        T[-1, n_struct:n_struct + n_art] = 0.0
        _run_simplex(T, basis, n_struct + n_art, max_iter)
        if T[-1, -1] > FEAS_TOL:
            raise Infeasible(f"phase-1 residual {T[-1, -1]:.3e}")
        keep = np.ones(k, dtype=bool)
        for i in np.flatnonzero(basis >= n_struct):
            nz = np.flatnonzero(np.abs(T[i, :n_struct]) > 1e-9)
            if nz.size:
                _pivot(T, i, nz[0])
                basis[i] = nz[0]
            else:
                keep[i] = False
        T = np.vstack([T[:k][keep], T[-1:]])
        basis = basis[keep]
        active = active[keep]
        T = np.delete(T, np.s_[n_struct:n_struct + n_art], axis=1)

    cost = np.concatenate([c, -c, np.zeros(k)])
    T[-1, :] = 0.0
    T[-1, :n_struct] = cost
    m = T.shape[0] - 1
    T[-1] -= cost[basis] @ T[:m]
    _run_simplex(T, basis, n_struct, max_iter)

    x = np.zeros(n_struct)
    x[basis] = T[:m, -1]
    try:
        x_b = np.linalg.solve(A_eq[active][:, basis], b_eq[active])
        if np.all(np.isfinite(x_b)):
            x[:] = 0.0
            x[basis] = x_b
    except np.linalg.LinAlgError:
        pass
    z = x[:d] - x[d:2 * d]
    return LPResult(float(c @ z), z)


def contains(P, z, tol=FEAS_TOL):
    z = _check_dim(P, z)
    return bool(np.all(P.H @ z <= P.h + tol))


def support(P, direction):
    """Support function ``max_{z in P} direction @ z``."""
    direction = _check_dim(P, direction)
    if not np.any(direction):
        return 0.0
    return lp_solve(direction, P).optimum


def bounding_box(P):
    """Axis-aligned bounds ``(lower, upper)``; raises Unbounded if P is unbounded."""
    eye = np.eye(P.dim)
    upper = np.array([support(P, e) for e in eye])
    lower = np.array([-support(P, -e) for e in eye])
    return lower, upper


def is_bounded(P):
    try:
        bounding_box(P)
    except Unbounded:
        return False
    return True


def remove_redundancy(P, tol=FEAS_TOL):
    """Drop every row implied by the other retained rows.

    Rows are visited in order; row ``i`` is removed when maximizing its normal
    over the remaining rows gives at most ``offset + tol``.
    """
    keep = np.ones(P.n_rows, dtype=bool)
    for i in range(P.n_rows):
        keep[i] = False
        others = Polytope(P.H[keep], P.h[keep], dim=P.dim)
        try:
            redundant = support(others, P.H[i]) <= P.h[i] + tol
        except Unbounded:
            redundant = False
        keep[i] = not redundant
    return Polytope(P.H[keep], P.h[keep], dim=P.dim)


def scale(P, beta):
    """The set ``beta * P`` for a polytope containing the origin."""
    if not 0.0 < beta <= 1.0:
        raise InvalidBeta(f"beta={beta} not in (0, 1]")
    if not contains(P, np.zeros(P.dim)):
        raise ValueError("scaling requires 0 in P")
    return Polytope(P.H, beta * P.h, dim=P.dim)


def chebyshev_center(P):
    """Center and radius of the largest Euclidean ball inside ``P``."""
    if P.n_rows == 0:
        raise ValueError("polytope has no rows")
    norms = np.linalg.norm(P.H, axis=1)
    H = np.vstack([np.column_stack([P.H, norms]), np.append(np.zeros(P.dim), -1.0)])
    h = np.append(P.h, 0.0)
    objective = np.append(np.zeros(P.dim), 1.0)
    try:
        res = lp_solve(objective, Polytope(H, h, dim=P.dim + 1))
    except Infeasible as exc:
        raise Infeasible("polytope is empty", operation="chebyshev_center") from exc
    return res.maximizer[:-1], float(res.maximizer[-1])


def project(P, z, max_iter=None):
    """Euclidean projection of ``z`` onto ``P`` by a primal active-set QP.

    Solves ``min |s - z|^2 s.t. H s <= h`` starting from the Chebyshev center.
    The working set stays linearly independent; the returned point is the
    exact projection onto the affine hull of the final working set.
    """
    z = _check_dim(P, z)
    H, h = P.H, P.h
    if np.all(H @ z <= h):
        return z.copy()
    s = np.array(P.interior_point, dtype=float)
    max_iter = max_iter or 100 * max(P.n_rows, 1)
    work = []
    for _ in range(max_iter):
        g = s - z
        if work:
            Hw = H[work]
            G = Hw @ Hw.T
            mu = -np.linalg.solve(G, Hw @ g)
            p = -g - Hw.T @ mu
        else:
            mu = np.zeros(0)
            p = -g
        if np.linalg.norm(p) <= 1e-12 * (1.0 + np.linalg.norm(g)):
            if mu.size == 0 or mu.min() >= -1e-12:
                return _refine(H, h, z, work, s)
            work.pop(int(np.argmin(mu)))
            continue
        Hp = H @ p
        step, blocking = 1.0, None
        for i in np.flatnonzero(Hp > 1e-14):
            if i in work:
                continue
            a = max(h[i] - H[i] @ s, 0.0) / Hp[i]
            if a < step:
                step, blocking = a, i
        s = s + step * p
        if blocking is not None:
            work.append(int(blocking))
    raise IterationLimit(f"active set did not settle in {max_iter} iterations", operation="project")


def _refine(H, h, z, work, s):
    if not work:
        return s
    Hw = H[work]
    try:
        lam = np.linalg.solve(Hw @ Hw.T, Hw @ z - h[work])
    except np.linalg.LinAlgError:
        return s
    exact = z - Hw.T @ lam
    return exact if np.all(H @ exact <= h + FEAS_TOL) else s

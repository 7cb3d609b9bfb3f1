"""Plant model, prestabilizing feedback and the steady-state input sets."""

from dataclasses import dataclass

import numpy as np

from . import polytope as pt
from .errors import (
    DimensionMismatch,
    EmptySteadyStateSet,
    InvalidBeta,
    NotControllable,
    NotSchurStable,
    SingularMatrix,
    UnstablePoleRequested,
)
from .numerics import DecayEnvelope, as_matrix, schur_decay_envelope, solve_discrete_lyapunov, solve_linear
from .polytope import Polytope


@dataclass(frozen=True, eq=False)
class LtiSystem:
    """``x+ = A x + B u`` with output constraint ``C0 x + D0 u in Y``."""

    A: np.ndarray
    B: np.ndarray
    C0: np.ndarray
    D0: np.ndarray
    Y: Polytope

    def __post_init__(self):
        for name in ("A", "B", "C0", "D0"):
            object.__setattr__(self, name, as_matrix(getattr(self, name), name))
        n, m, p = self.A.shape[0], self.B.shape[1], self.C0.shape[0]
        if (self.A.shape != (n, n) or self.B.shape != (n, m) or self.C0.shape != (p, n)
                or self.D0.shape != (p, m) or self.Y.dim != p):
            raise DimensionMismatch(
                f"inconsistent shapes A{self.A.shape} B{self.B.shape} "
                f"C0{self.C0.shape} D0{self.D0.shape} Y(dim={self.Y.dim})")
        if not np.all(self.Y.h > 0.0):
            raise ValueError("Y must contain the origin in its interior")
        if not pt.is_bounded(self.Y):
            raise ValueError("Y must be bounded")

    @property
    def n(self):
        return self.A.shape[0]

    @property
    def m(self):
        return self.B.shape[1]

    @property
    def p(self):
        return self.C0.shape[0]

    @classmethod
    def with_box_constraints(cls, A, B, state_bound=1.0, input_bound=1.0):
        """Constraints ``|x_i| <= state_bound`` and ``|u_j| <= input_bound`` on ``y = [x; u]``."""
        A, B = as_matrix(A, "A"), as_matrix(B, "B")
        n, m = B.shape
        C0 = np.vstack([np.eye(n), np.zeros((m, n))])
        D0 = np.vstack([np.zeros((n, m)), np.eye(m)])
        bound = np.concatenate([np.full(n, float(state_bound)), np.full(m, float(input_bound))])
        return cls(A, B, C0, D0, Polytope.box(-bound, bound))


@dataclass(frozen=True, eq=False)
class PrestabilizedSystem:
    """The loop ``x+ = A_K x + B v`` obtained from ``u = v + K x``."""

    base: LtiSystem
    K: np.ndarray
    A_K: np.ndarray
    C: np.ndarray
    D: np.ndarray
    S_K: np.ndarray
    S_v: Polytope
    S_v_bar: Polytope
    envelope: DecayEnvelope
    beta: float

    @property
    def n(self):
        return self.base.n

    @property
    def m(self):
        return self.base.m

    @property
    def Y(self):
        return self.base.Y

    @property
    def steady_output_map(self):
        """``C S_K + D``: output at the steady state of a constant reference."""
        return self.C @ self.S_K + self.D


def controllability_matrix(A, B):
    A, B = as_matrix(A), as_matrix(B)
    blocks = [B]
    for _ in range(A.shape[0] - 1):
        blocks.append(A @ blocks[-1])
    return np.hstack(blocks)


def place_poles_ackermann(A, B, poles):
    """Single-input pole placement, returned in the ``u = K x`` convention.

    ``K = -e_n^T Ctrb^{-1} phi(A)`` with ``phi`` the desired characteristic
    polynomial.
    """
    A, B = as_matrix(A, "A"), as_matrix(B, "B")
    n = A.shape[0]
    poles = np.atleast_1d(np.asarray(poles, dtype=float))
    if B.shape != (n, 1):
        raise DimensionMismatch("Ackermann placement needs a single-input system")
    if poles.size != n:
        raise DimensionMismatch(f"{poles.size} poles for a system of order {n}")
    if np.any(np.abs(poles) >= 1.0):
        raise UnstablePoleRequested(f"poles {poles} are not inside the unit disk")

    phi = np.eye(n)
    for pole in poles:
        phi = phi @ (A - pole * np.eye(n))
    ctrb = controllability_matrix(A, B)
    last = np.zeros(n)
    last[-1] = 1.0
    try:
        # row vector e_n^T Ctrb^{-1} via the transposed system
        w = solve_linear(ctrb.T, last, pivot_tol=1e-10)
    except SingularMatrix as exc:
        raise NotControllable("controllability matrix is singular") from exc
    K = -(w @ phi).reshape(1, n)
    try:
        solve_discrete_lyapunov(A + B @ K)
    except NotSchurStable as exc:
        raise NotControllable("placement did not produce a Schur-stable loop") from exc
    return K


def prestabilize(sys, K, beta=0.95):
    """Assemble ``A_K``, ``C``, ``D``, ``S_K`` and the sets ``S_v``, ``S_v_bar``."""
    K = as_matrix(K, "K")
    if K.shape != (sys.m, sys.n):
        raise DimensionMismatch(f"K has shape {K.shape}, expected {(sys.m, sys.n)}")
    if not 0.0 < beta < 1.0:
        raise InvalidBeta(f"beta={beta} not in (0, 1)", operation="prestabilize")
    A_K = sys.A + sys.B @ K
    try:
        envelope = schur_decay_envelope(A_K)
    except NotSchurStable as exc:
        raise NotSchurStable("A + B K is not Schur stable", operation="prestabilize") from exc
    C = sys.C0 + sys.D0 @ K
    D = sys.D0.copy()
    S_K = solve_linear(np.eye(sys.n) - A_K, sys.B)

    G = C @ S_K + D
    S_v = Polytope(sys.Y.H @ G, sys.Y.h, dim=sys.m)
    if not pt.is_bounded(S_v):
        raise EmptySteadyStateSet("steady-state input set is unbounded (C S_K + D rank deficient)")
    S_v = pt.remove_redundancy(S_v)
    try:
        _, radius = pt.chebyshev_center(S_v)
    except pt.Infeasible as exc:
        raise EmptySteadyStateSet("steady-state input set is empty") from exc
    if radius <= 0.0:
        raise EmptySteadyStateSet("steady-state input set has empty interior")
    return PrestabilizedSystem(
        base=sys, K=K, A_K=A_K, C=C, D=D, S_K=S_K, S_v=S_v,
        S_v_bar=pt.scale(S_v, beta), envelope=envelope, beta=float(beta))


def step(sys, x, v):
    """One plant step under ``u = v + K x``; returns ``(x_next, u, y)``."""
    x = np.asarray(x, dtype=float).ravel()
    v = np.asarray(v, dtype=float).ravel()
    if x.size != sys.n or v.size != sys.m:
        raise DimensionMismatch(f"x has {x.size} entries, v has {v.size}; expected {sys.n}, {sys.m}")
    u = v + sys.K @ x
    y = sys.base.C0 @ x + sys.base.D0 @ u
    x_next = sys.A_K @ x + sys.base.B @ v
    return x_next, u, y


def output_margin(Y, y):
    """Largest constraint violation ``max(H y - h)``; nonpositive means ``y in Y``."""
    return float(np.max(Y.H @ y - Y.h))

"""Online gradient step plus reference governor.

Each step moves the reference estimate ``r`` by one projected gradient step on
the previous steady-state cost, then moves the applied reference ``v`` as far
toward ``r`` as the contractive admissible set allows.
"""

import warnings
from dataclasses import dataclass, replace

import numpy as np

from . import polytope as pt
from .cost import convexity_bounds
from .errors import DimensionMismatch, InfeasibleCurrentPoint, InfeasibleInitialization
from .mas import mas_contains

PRECONDITION_TOL = 1e-7
BOUNDARY_TOL = 1e-9


@dataclass(frozen=True)
class ControllerState:
    r: np.ndarray
    v: np.ndarray
    alpha: float
    t: int


@dataclass(frozen=True, eq=False)
class ControllerConfig:
    sys: object
    mas: object
    gamma: float = 0.1
    q_range: tuple = None

    def __post_init__(self):
        if self.gamma <= 0:
            raise ValueError(f"gamma={self.gamma} must be positive")
        if self.q_range is not None:
            bound = convexity_bounds(self.sys, self.q_range).step_bound
            if self.gamma > bound:
                warnings.warn(f"gamma={self.gamma} exceeds 2/(alpha_v + l_v)={bound:.4g} "
                              f"over q in {self.q_range}", stacklevel=2)


def _vec(a, size, name):
    a = np.atleast_1d(np.asarray(a, dtype=float)).ravel()
    if a.size != size:
        raise DimensionMismatch(f"{name} has {a.size} entries, expected {size}")
    return a


def check_initial_feasibility(cfg, r0, x0):
    """``r0 in S_v`` and ``(r0, x0 - S_K r0)`` in the admissible set."""
    sys = cfg.sys
    r0, x0 = _vec(r0, sys.m, "r0"), _vec(x0, sys.n, "x0")
    return pt.contains(sys.S_v, r0) and mas_contains(cfg.mas, r0, x0 - sys.S_K @ r0)


def initialize(cfg, r0, x0):
    """Time-zero bootstrap: ``alpha_0 = 1``, ``v_0 = r_0``, ``u_0 = v_0 + K x_0``."""
    if not check_initial_feasibility(cfg, r0, x0):
        raise InfeasibleInitialization(
            "infeasible initialization: r0 must lie in S_v and (r0, x0 - S_K r0) "
            "in the lambda-contractive admissible set")
    r0 = _vec(r0, cfg.sys.m, "r0")
    x0 = _vec(x0, cfg.sys.n, "x0")
    state = ControllerState(r=r0.copy(), v=r0.copy(), alpha=1.0, t=0)
    return cfg.sys.K @ x0 + state.v, state


def ogd_step(cfg, state, grad_prev):
    grad_prev = _vec(grad_prev, cfg.sys.m, "grad_prev")
    return pt.project(cfg.sys.S_v_bar, state.r - cfg.gamma * grad_prev)


def rg_line_search(cfg, state, x, r_new):
    """Largest ``alpha in [0, 1]`` keeping ``(v, x - S_K v)`` admissible.

    With ``v(alpha) = v_prev + alpha d`` the joint point is affine in alpha, so
    the maximizer is a ratio test over the polytope rows.
    """
    sys, mas = cfg.sys, cfg.mas
    x = _vec(x, sys.n, "x")
    r_new = _vec(r_new, sys.m, "r_new")
    H_nu, H_chi, h = mas.split()
    v0 = state.v
    d = r_new - v0
    value = H_nu @ v0 + H_chi @ (x - sys.S_K @ v0)
    worst = float(np.max(value - h))
    if worst > PRECONDITION_TOL:
        raise InfeasibleCurrentPoint(f"current point violates the admissible set by {worst:.3e}")
    slope = H_nu @ d - H_chi @ (sys.S_K @ d)
    binding = slope > 1e-12
    alpha = 1.0
    if binding.any():
        ratios = (h[binding] - value[binding]) / slope[binding]
        # roundoff on a boundary row: alpha = 0 is feasible by recursive feasibility
        ratios[(ratios < 0.0) & (ratios > -BOUNDARY_TOL)] = 0.0
        alpha = float(min(1.0, max(ratios.min(), 0.0)))
    return alpha, v0 + alpha * d


def controller_step(cfg, state, x, grad_prev):
    """One full step; returns ``(u, next_state)``."""
    r_next = ogd_step(cfg, state, grad_prev)
    alpha, v_next = rg_line_search(cfg, state, x, r_next)
    u = v_next + cfg.sys.K @ np.asarray(x, dtype=float).ravel()
    return u, replace(state, r=r_next, v=v_next, alpha=alpha, t=state.t + 1)

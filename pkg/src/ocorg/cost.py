"""Quadratic tracking costs, their steady-state restriction and the optimal steady state."""

from dataclasses import dataclass, field

import numpy as np

from . import polytope as pt
from .errors import DimensionMismatch, IterationLimit, NotStronglyConvex
from .numerics import sym_eig_extremes


@dataclass(frozen=True)
class QuadraticTrackingCost:
    """``L(u, x) = 0.5 |x - x_target|^2 + 0.5 q |u|^2``."""

    x_target: np.ndarray
    q: float

    def __post_init__(self):
        x = np.atleast_1d(np.asarray(self.x_target, dtype=float))
        if not np.all(np.isfinite(x)):
            raise ValueError("x_target must be finite")
        if self.q < 0:
            raise ValueError(f"q={self.q} must be nonnegative")
        object.__setattr__(self, "x_target", x)
        object.__setattr__(self, "q", float(self.q))


def eval_cost(cost, u, x):
    u, x = np.atleast_1d(np.asarray(u, dtype=float)), np.atleast_1d(np.asarray(x, dtype=float))
    if x.shape != cost.x_target.shape:
        raise DimensionMismatch(f"x has shape {x.shape}, target has {cost.x_target.shape}")
    return 0.5 * float(np.sum((x - cost.x_target) ** 2)) + 0.5 * cost.q * float(u @ u)


def input_map(sys):
    """``M = I + K S_K``: steady input per unit reference."""
    return np.eye(sys.m) + sys.K @ sys.S_K


def steady_cost(sys, cost, v):
    """``L^s(v) = L((I + K S_K) v, S_K v)``."""
    v = np.atleast_1d(np.asarray(v, dtype=float))
    return eval_cost(cost, input_map(sys) @ v, sys.S_K @ v)


def steady_gradient(sys, cost, v):
    v = np.atleast_1d(np.asarray(v, dtype=float))
    if v.size != sys.m or cost.x_target.size != sys.n:
        raise DimensionMismatch("reference or target size does not match the system")
    M = input_map(sys)
    return sys.S_K.T @ (sys.S_K @ v - cost.x_target) + cost.q * (M.T @ (M @ v))


def steady_hessian(sys, q):
    M = input_map(sys)
    return sys.S_K.T @ sys.S_K + q * (M.T @ M)


@dataclass(frozen=True)
class ConvexityBounds:
    alpha_v: float
    l_v: float

    @property
    def step_bound(self):
        """Largest step ``2 / (alpha_v + l_v)`` for which projected gradient contracts."""
        return 2.0 / (self.alpha_v + self.l_v)

    def kappa(self, gamma):
        """Contraction factor of the projected gradient map with step ``gamma``.

        Equals ``1 - gamma * alpha_v`` whenever ``gamma <= step_bound``; beyond
        that the ``l_v`` end of the spectrum dominates.
        """
        return max(abs(1.0 - gamma * self.alpha_v), abs(1.0 - gamma * self.l_v))


def convexity_bounds(sys, q_range):
    """Worst-case strong convexity and smoothness over ``q in q_range``.

    The Hessian ``S_K^T S_K + q M^T M`` is monotone in ``q``, so the extremes
    sit at the ends of the range.
    """
    q_lo, q_hi = float(min(q_range)), float(max(q_range))
    alpha_v = sym_eig_extremes(steady_hessian(sys, q_lo))[0]
    l_v = sym_eig_extremes(steady_hessian(sys, q_hi))[1]
    if alpha_v <= 1e-12:
        raise NotStronglyConvex(f"steady-state cost has curvature {alpha_v:.3e}")
    return ConvexityBounds(alpha_v=alpha_v, l_v=l_v)


def optimal_steady_reference(sys, cost, tol=1e-11, max_iter=100_000):
    """``eta = argmin_{r in S_v_bar} L^s(r)`` and ``theta = S_K eta``.

    Projected gradient with the optimal fixed step ``2 / (alpha_v + l_v)``.
    """
    bounds = convexity_bounds(sys, (cost.q, cost.q))
    gamma = bounds.step_bound
    v = np.zeros(sys.m)
    for _ in range(max_iter):
        v_next = pt.project(sys.S_v_bar, v - gamma * steady_gradient(sys, cost, v))
        if np.linalg.norm(v_next - v) <= tol:
            return v_next, sys.S_K @ v_next
        v = v_next
    raise IterationLimit(f"no convergence in {max_iter} iterations", operation="optimal_steady_reference")


@dataclass
class CostSchedule:
    """Seeded random sequence of tracking costs.

    ``x_target_t = z_t + amplitude * sin(2 pi t / period)`` on every state
    coordinate; ``z_t`` and ``q_t`` are each redrawn uniformly with probability
    ``switch_probability`` at every step. Randomness comes from numpy's PCG64
    seeded with ``seed``, so a schedule is reproducible across platforms.
    """

    seed: int = 0
    switch_probability: float = 0.01
    q_range: tuple = (0.0, 2.0)
    z_range: tuple = (-1.0, 1.0)
    sine_amplitude: float = 0.2
    sine_period: float = 200.0

    def __post_init__(self):
        if not 0.0 <= self.switch_probability <= 1.0:
            raise ValueError("switch_probability must lie in [0, 1]")
        self.q_range = tuple(float(q) for q in self.q_range)
        self.z_range = tuple(float(z) for z in self.z_range)
        if self.q_range[0] < 0 or self.q_range[0] > self.q_range[1] or self.z_range[0] > self.z_range[1]:
            raise ValueError("invalid q_range or z_range")

    @property
    def q_max(self):
        return self.q_range[1]

    @property
    def target_bound(self):
        return max(abs(self.z_range[0]), abs(self.z_range[1])) + abs(self.sine_amplitude)

    def stream(self, n):
        rng = np.random.Generator(np.random.PCG64(self.seed))
        q = rng.uniform(*self.q_range)
        z = rng.uniform(*self.z_range)
        t = 0
        while True:
            if t > 0:
                if rng.random() < self.switch_probability:
                    q = rng.uniform(*self.q_range)
                if rng.random() < self.switch_probability:
                    z = rng.uniform(*self.z_range)
            wave = self.sine_amplitude * np.sin(2.0 * np.pi * t / self.sine_period)
            yield QuadraticTrackingCost(np.full(n, z + wave), q)
            t += 1

    def costs(self, n, count):
        stream = self.stream(n)
        return [next(stream) for _ in range(count)]


@dataclass
class FrozenCost:
    """The same cost at every step."""

    cost: QuadraticTrackingCost
    q_range: tuple = field(init=False)

    def __post_init__(self):
        self.q_range = (self.cost.q, self.cost.q)

    @property
    def q_max(self):
        return self.cost.q

    @property
    def target_bound(self):
        return float(np.max(np.abs(self.cost.x_target)))

    def costs(self, n, count):
        if self.cost.x_target.size != n:
            raise DimensionMismatch("frozen target does not match the state dimension")
        return [self.cost] * count


def lipschitz_estimate(sys, schedule):
    """Upper bound on the Lipschitz constant of the costs over ``Z``.

    ``Z = {(u, x) : C0 x + D0 u in Y}``. The cost gradient is
    ``(q u, x - x_target)``, bounded coordinatewise by the support of ``Z``
    and the parameter ranges.
    """
    base = sys.base
    Z = pt.Polytope(base.Y.H @ np.hstack([base.D0, base.C0]), base.Y.h, dim=base.m + base.n)
    lo, hi = pt.bounding_box(Z)
    reach = np.maximum(np.abs(lo), np.abs(hi))
    u_sup, x_sup = reach[:base.m], reach[base.m:]
    grad = np.concatenate([schedule.q_max * u_sup, x_sup + schedule.target_bound])
    return float(np.linalg.norm(grad))

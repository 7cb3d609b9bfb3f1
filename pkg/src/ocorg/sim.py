"""Closed-loop simulation, dynamic regret and the linear-in-path-length bound."""

import csv
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import controller as ctl
from .cost import (
    convexity_bounds,
    eval_cost,
    lipschitz_estimate,
    optimal_steady_reference,
    steady_cost,
    steady_gradient,
)
from .errors import InvalidEpsilon, OcorgError
from .numerics import spectral_norm
from .system import output_margin, step

log = logging.getLogger(__name__)

BOUND_SLACK = 1e-6


@dataclass(eq=False)
class Scenario:
    """Everything a closed-loop run needs."""

    sys: object
    mas: object
    schedule: object
    gamma: float = 0.1
    x0: np.ndarray = None
    r0: np.ndarray = None

    def __post_init__(self):
        self.x0 = np.zeros(self.sys.n) if self.x0 is None else np.atleast_1d(np.asarray(self.x0, dtype=float))
        self.r0 = np.zeros(self.sys.m) if self.r0 is None else np.atleast_1d(np.asarray(self.r0, dtype=float))

    @property
    def config(self):
        return ctl.ControllerConfig(self.sys, self.mas, self.gamma)


@dataclass
class SimulationTrace:
    """Per-step records for ``t = 0..T`` (row ``t`` of every array)."""

    x: np.ndarray
    u: np.ndarray
    y: np.ndarray
    v: np.ndarray
    r: np.ndarray
    alpha: np.ndarray
    eta: np.ndarray
    theta: np.ndarray
    stage_cost: np.ndarray
    benchmark_cost: np.ndarray
    constraint_margin: np.ndarray

    @property
    def T(self):
        return self.alpha.size - 1

    def header(self):
        n, m = self.x.shape[1], self.v.shape[1]

        def cols(name, k):
            return [f"{name}_{i + 1}" for i in range(k)]
        return (["t"] + cols("x", n) + cols("u", m) + cols("v", m) + cols("r", m) + ["alpha"]
                + cols("eta", m) + ["stage_cost", "benchmark_cost", "constraint_margin"])

    def rows(self):
        for t in range(self.T + 1):
            yield ([t, *self.x[t], *self.u[t], *self.v[t], *self.r[t], self.alpha[t], *self.eta[t],
                    self.stage_cost[t], self.benchmark_cost[t], self.constraint_margin[t]])

    def write_csv(self, path):
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(self.header())
            for row in self.rows():
                writer.writerow([str(row[0])] + [format(float(val), ".17g") for val in row[1:]])


def run_closed_loop(scenario, T):
    """Simulate the plant under the governed controller for ``t = 0..T``.

    The cost of step ``t`` is revealed after acting; its gradient at ``r_t``
    drives the estimate used at ``t + 1``. The benchmark ``eta_t`` is solved
    exactly at every step.
    """
    if T < 1:
        raise ValueError("T must be at least 1")
    sys, cfg = scenario.sys, scenario.config
    n, m, p = sys.n, sys.m, sys.base.p
    costs = scenario.schedule.costs(n, T + 1)

    trace = SimulationTrace(
        x=np.zeros((T + 1, n)), u=np.zeros((T + 1, m)), y=np.zeros((T + 1, p)),
        v=np.zeros((T + 1, m)), r=np.zeros((T + 1, m)), alpha=np.zeros(T + 1),
        eta=np.zeros((T + 1, m)), theta=np.zeros((T + 1, n)), stage_cost=np.zeros(T + 1),
        benchmark_cost=np.zeros(T + 1), constraint_margin=np.zeros(T + 1))

    x = scenario.x0.copy()
    _, state = ctl.initialize(cfg, scenario.r0, x)
    for t in range(T + 1):
        try:
            if t > 0:
                grad = steady_gradient(sys, costs[t - 1], state.r)
                _, state = ctl.controller_step(cfg, state, x, grad)
            x_next, u, y = step(sys, x, state.v)
            eta, theta = optimal_steady_reference(sys, costs[t])
        except OcorgError as exc:
            raise type(exc)(f"step {t}: {exc}", operation=exc.operation) from exc
        trace.x[t], trace.u[t], trace.y[t] = x, u, y
        trace.v[t], trace.r[t], trace.alpha[t] = state.v, state.r, state.alpha
        trace.eta[t], trace.theta[t] = eta, theta
        trace.stage_cost[t] = eval_cost(costs[t], u, x)
        trace.benchmark_cost[t] = steady_cost(sys, costs[t], eta)
        trace.constraint_margin[t] = output_margin(sys.Y, y)
        x = x_next
    return trace


def dynamic_regret(trace):
    return float(np.sum(trace.stage_cost - trace.benchmark_cost))


def path_length(trace):
    return float(np.sum(np.linalg.norm(np.diff(trace.eta, axis=0), axis=1)))


@dataclass(frozen=True)
class BoundConstants:
    K_0_theta: float
    K_0_eta: float
    K_eta: float
    K_0: float
    k_x: float
    k_v: float
    k_x_tilde: float
    epsilon_kappa: float

    def bound(self, path):
        return self.K_0 + self.K_eta * path


def regret_bound_constants(sys, lipschitz, epsilon_hat, kappa, x0, theta0, v0, eta0):
    """Constants of ``R <= K_0 + K_eta * path_length``.

    Uses the decay envelope ``||A_K^t|| <= c sigma^t`` of the system, the cost
    Lipschitz constant, the gradient contraction ``kappa`` and a lower bound
    ``epsilon_hat`` on the governor step fractions.
    """
    if not 0.0 < epsilon_hat <= 1.0:
        raise InvalidEpsilon(f"epsilon={epsilon_hat} must lie in (0, 1]")
    if not 0.0 <= kappa < 1.0:
        raise ValueError(f"kappa={kappa} must lie in [0, 1)")
    c, sigma = sys.envelope.c, sys.envelope.sigma
    k_x = lipschitz * spectral_norm(np.vstack([sys.K, np.eye(sys.n)]))
    k_v = lipschitz * spectral_norm(np.vstack([sys.K @ sys.S_K + np.eye(sys.m), sys.S_K]))
    k_x_tilde = k_x * c * spectral_norm(sys.S_K)
    eps_k = epsilon_hat * (1.0 - kappa)
    K_0_theta = k_x * c / (1.0 - sigma)
    K_0_eta = (2.0 * k_x_tilde * (1.0 + eps_k) + k_v * (1.0 - sigma)) / (eps_k * (1.0 - sigma))
    K_eta = (k_x_tilde * (2.0 + eps_k) + k_v * (1.0 - sigma)) / (eps_k * (1.0 - sigma))
    K_0 = (K_0_theta * float(np.linalg.norm(np.subtract(x0, theta0)))
           + K_0_eta * float(np.linalg.norm(np.subtract(v0, eta0))))
    return BoundConstants(K_0_theta, K_0_eta, K_eta, K_0, k_x, k_v, k_x_tilde, eps_k)


@dataclass
class RegretReport:
    regret: float
    path_length: float
    ratio: float
    constants: BoundConstants
    bound_value: float
    epsilon_hat: float
    kappa: float
    lipschitz: float
    bound_holds: bool
    grid: dict = field(default_factory=dict)
    largest_epsilon: float = None

    @property
    def margin(self):
        return self.bound_value - self.regret

    def to_dict(self):
        c = self.constants
        return {
            "regret": self.regret,
            "path_length": self.path_length,
            "ratio": self.ratio,
            "epsilon_hat": self.epsilon_hat,
            "kappa": self.kappa,
            "lipschitz": self.lipschitz,
            "bound": {
                "K_0_theta": c.K_0_theta, "K_0_eta": c.K_0_eta, "K_eta": c.K_eta, "K_0": c.K_0,
                "value": self.bound_value, "holds": self.bound_holds, "margin": self.margin,
                "epsilon_grid": {repr(eps): ok for eps, ok in self.grid.items()},
                "largest_epsilon": self.largest_epsilon,
            },
        }


def regret_report(scenario, trace):
    """Regret, path length and the bound evaluated with ``epsilon_hat = min_t alpha_t``.

    The bound is also checked at ``epsilon_hat / 2`` and ``epsilon_hat / 10``,
    and the largest epsilon in ``(0, 1]`` for which it still holds is reported.
    """
    sys = scenario.sys
    R, L = dynamic_regret(trace), path_length(trace)
    eps_hat = float(trace.alpha.min())
    kappa = convexity_bounds(sys, scenario.schedule.q_range).kappa(scenario.gamma)
    l_L = lipschitz_estimate(sys, scenario.schedule)

    def constants(eps):
        return regret_bound_constants(sys, l_L, eps, kappa, trace.x[0], trace.theta[0],
                                      trace.v[0], trace.eta[0])

    def holds(eps):
        return R <= constants(eps).bound(L) + BOUND_SLACK

    if eps_hat <= 0.0 or kappa >= 1.0:
        nan = math.nan
        consts = BoundConstants(nan, nan, math.inf, math.inf, nan, nan, nan, 0.0)
        return RegretReport(R, L, _ratio(R, L), consts, math.inf, eps_hat, kappa, l_L, False)

    consts = constants(eps_hat)
    grid = {eps: holds(eps) for eps in (eps_hat, eps_hat / 2, eps_hat / 10)}
    return RegretReport(
        regret=R, path_length=L, ratio=_ratio(R, L), constants=consts,
        bound_value=consts.bound(L), epsilon_hat=eps_hat, kappa=kappa, lipschitz=l_L,
        bound_holds=grid[eps_hat], grid=grid, largest_epsilon=_largest_epsilon(holds))


def _ratio(regret, path):
    return regret / path if path > 0 else math.inf


def _largest_epsilon(holds, iters=60):
    if holds(1.0):
        return 1.0
    lo, hi = 0.0, 1.0
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        if holds(mid):
            lo = mid
        else:
            hi = mid
    return lo if lo > 0.0 else None


def _run_one(args):
    scenario, T = args
    trace = run_closed_loop(scenario, T)
    return trace, regret_report(scenario, trace)


def run_batch(scenarios, T, workers=1):
    """Independent runs, optionally in worker processes; results keep input order."""
    jobs = [(s, T) for s in scenarios]
    if workers <= 1:
        return [_run_one(job) for job in jobs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_run_one, jobs))

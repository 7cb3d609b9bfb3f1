"""λ-contractive maximal output admissible set of the reference/error system.

The augmented autonomous system is

    nu+  = nu
    chi+ = (1/lam) A_K chi
    psi  = C chi + (C S_K + D) nu  in Y

and its admissible set is built by adding the constraint rows of horizon
t = 0, 1, ... until a whole horizon is redundant. The identity block on ``nu``
prevents finite determination of the exact set, so the steady-state rows are
tightened to ``(1 - eps) Y``, which yields a close inner approximation.
"""

import logging
from dataclasses import dataclass

import numpy as np

from . import polytope as pt
from .errors import DimensionMismatch, HorizonExceeded, LambdaTooSmall, MasError, NotSchurStable, Unbounded
from .numerics import solve_discrete_lyapunov
from .polytope import FEAS_TOL, Polytope

log = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class LambdaMas:
    """Admissible set over joint coordinates ``(nu, chi)``, ``nu`` first."""

    lam: float
    set: Polytope
    determination_index: int
    epsilon_tighten: float
    m: int
    n: int

    def split(self):
        """Row blocks ``(H_nu, H_chi, h)``."""
        H = self.set.H
        return H[:, :self.m], H[:, self.m:], self.set.h


def _normalized(H, h):
    norms = np.linalg.norm(H, axis=1)
    keep = norms > 1e-14
    return H[keep] / norms[keep, None], h[keep] / norms[keep]


def horizon_rows(sys, lam, t):
    """Constraint rows ``Hy (C M^t chi + G nu) <= hy`` with ``M = A_K / lam``."""
    M_t = np.linalg.matrix_power(sys.A_K / lam, t)
    Hy, hy = sys.Y.H, sys.Y.h
    H = np.hstack([Hy @ sys.steady_output_map, Hy @ sys.C @ M_t])
    return _normalized(H, hy.copy())


def limit_rows(sys, epsilon_tighten):
    """Steady-state rows ``G nu in (1 - eps) Y``."""
    Hy, hy = sys.Y.H, sys.Y.h
    H = np.hstack([Hy @ sys.steady_output_map, np.zeros((Hy.shape[0], sys.n))])
    return _normalized(H, (1.0 - epsilon_tighten) * hy)


def _redundant(P, a, b):
    try:
        return pt.support(P, a) <= b + FEAS_TOL
    except Unbounded:
        return False


def compute_lambda_mas(sys, lam=0.95, epsilon_tighten=1e-6, max_horizon=500):
    """Gilbert-Tan construction of the λ-contractive admissible set.

    Returns the redundancy-free polytope of horizons ``0..k*`` plus the
    tightened steady-state rows; ``k*`` is the last horizon that contributed
    before a full horizon of candidate rows turned out redundant.
    """
    if not 0.0 < lam < 1.0:
        raise LambdaTooSmall(f"lambda={lam} must lie in (0, 1)")
    if not 0.0 < epsilon_tighten <= 0.1:
        raise ValueError(f"epsilon_tighten={epsilon_tighten} not in (0, 0.1]")
    try:
        solve_discrete_lyapunov(sys.A_K / lam)
    except NotSchurStable as exc:
        raise LambdaTooSmall(f"A_K / {lam} is not Schur stable; lambda must exceed rho(A_K)") from exc

    H0, h0 = horizon_rows(sys, lam, 0)
    Hl, hl = limit_rows(sys, epsilon_tighten)
    _check_reference_set(sys, Hl[:, :sys.m], hl)

    H, h = np.vstack([H0, Hl]), np.concatenate([h0, hl])
    dim = sys.m + sys.n
    k_star = None
    for t in range(1, max_horizon + 2):
        current = Polytope(H, h, dim=dim)
        Ht, ht = horizon_rows(sys, lam, t)
        new = [i for i in range(Ht.shape[0]) if not _redundant(current, Ht[i], ht[i])]
        if not new:
            k_star = t - 1
            break
        H, h = np.vstack([H, Ht[new]]), np.concatenate([h, ht[new]])
    if k_star is None:
        raise HorizonExceeded(f"no determination within {max_horizon} horizons")

    final = pt.remove_redundancy(Polytope(H, h, dim=dim))
    log.debug("lambda-MAS: k*=%d, %d rows", k_star, final.n_rows)
    return LambdaMas(lam=float(lam), set=final, determination_index=k_star,
                     epsilon_tighten=float(epsilon_tighten), m=sys.m, n=sys.n)


def _check_reference_set(sys, G_rows, offsets):
    # every reference the gradient layer can emit must clear the tightened rows
    for a, b in zip(G_rows, offsets):
        if pt.support(sys.S_v_bar, a) >= b:
            raise MasError("S_v_bar is not strictly inside the tightened steady-state set; "
                           "decrease beta or epsilon_tighten", operation="compute_lambda_mas")


def joint_point(v, e):
    return np.concatenate([np.ravel(v), np.ravel(e)])


def mas_contains(mas, v, e, tol=FEAS_TOL):
    v, e = np.ravel(np.asarray(v, dtype=float)), np.ravel(np.asarray(e, dtype=float))
    if v.size != mas.m or e.size != mas.n:
        raise DimensionMismatch(f"(v, e) sizes ({v.size}, {e.size}) != ({mas.m}, {mas.n})")
    return pt.contains(mas.set, joint_point(v, e), tol)


def mas_margin(mas, v, e):
    """``max(H z - h)`` at ``z = (v, e)``; nonpositive inside the set."""
    z = joint_point(v, e)
    return float(np.max(mas.set.H @ z - mas.set.h))


def sample_members(mas, sys, count, rng, reference_set=None):
    """Random members ``(v, e)`` with ``v`` drawn from ``reference_set`` (default ``S_v``).

    ``v`` is rejection-sampled from the bounding box; ``e`` is a uniform
    fraction of the longest feasible ray from ``(v, 0)`` in a Gaussian
    direction.
    """
    ref = sys.S_v if reference_set is None else reference_set
    lo, hi = pt.bounding_box(ref)
    H_nu, H_chi, h = mas.split()
    out = []
    while len(out) < count:
        v = rng.uniform(lo, hi)
        if not pt.contains(ref, v, 0.0):
            continue
        base = h - H_nu @ v
        if np.any(base < 0.0):
            continue
        w = rng.standard_normal(mas.n)
        rate = H_chi @ w
        pos = rate > 1e-14
        s_max = np.min(base[pos] / rate[pos]) if pos.any() else 1.0
        out.append((v, rng.uniform(0.0, 1.0) * s_max * w))
    return out


@dataclass
class Lemma1Report:
    samples: int
    contraction_passes: int
    output_passes: int
    worst_contraction_margin: float
    worst_output_margin: float

    @property
    def passed(self):
        return self.contraction_passes == self.samples and self.output_passes == self.samples


def verify_lemma1(mas, sys, samples=1000, steps=100, seed=0, tol=FEAS_TOL):
    """Sample-based check of contraction and constraint admissibility.

    For members ``(v, e)`` with ``v in S_v``: (i) ``(v, A_K e / lam)`` must stay a
    member; (ii) the frozen-reference loop started at ``x0 = e + S_K v`` must
    keep ``y_t in Y`` for ``steps`` steps.
    """
    rng = np.random.default_rng(seed)
    Hy, hy = sys.Y.H, sys.Y.h
    B = sys.base.B
    c_pass = o_pass = 0
    worst_c = worst_o = -np.inf
    for v, e in sample_members(mas, sys, samples, rng):
        mc = mas_margin(mas, v, sys.A_K @ e / mas.lam)
        worst_c = max(worst_c, mc)
        c_pass += mc <= tol
        x = e + sys.S_K @ v
        mo = -np.inf
        for _ in range(steps):
            mo = max(mo, float(np.max(Hy @ (sys.C @ x + sys.D @ v) - hy)))
            x = sys.A_K @ x + B @ v
        worst_o = max(worst_o, mo)
        o_pass += mo <= tol
    return Lemma1Report(samples, int(c_pass), int(o_pass), float(worst_c), float(worst_o))

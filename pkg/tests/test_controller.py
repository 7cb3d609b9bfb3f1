import warnings

import numpy as np
import pytest

from ocorg.controller import (
    ControllerConfig,
    ControllerState,
    check_initial_feasibility,
    controller_step,
    initialize,
    ogd_step,
    rg_line_search,
)
from ocorg.cost import QuadraticTrackingCost, steady_gradient
from ocorg.errors import InfeasibleCurrentPoint, InfeasibleInitialization
from ocorg.mas import mas_contains, sample_members
from ocorg.polytope import bounding_box, contains
from ocorg.system import step

from conftest import scalar_mas, scalar_system, two_state_mas, two_state_system
from oracles import bisect_alpha, mas_member_by_simulation, scalar_ogd_recursion


def scalar_cfg(gamma=0.1):
    return ControllerConfig(scalar_system(), scalar_mas(), gamma)


def state(r, v=None, t=1):
    r = np.atleast_1d(np.asarray(r, dtype=float))
    v = r if v is None else np.atleast_1d(np.asarray(v, dtype=float))
    return ControllerState(r=r, v=v, alpha=1.0, t=t)


# initial feasibility


def test_initial_feasibility_examples():
    cfg = scalar_cfg()
    assert check_initial_feasibility(cfg, [0.3], scalar_system().S_K @ [0.3])
    assert check_initial_feasibility(cfg, [0.0], [1.0])
    assert not check_initial_feasibility(cfg, [0.0], [1.5])


def test_initialize_bootstrap():
    u0, s = initialize(scalar_cfg(), [0.1], [0.4])
    assert s.t == 0 and s.alpha == 1.0
    assert s.v.tolist() == [0.1] and s.r.tolist() == [0.1]
    assert u0.tolist() == [0.1]  # K = 0


def test_initialize_refuses_infeasible_start():
    with pytest.raises(InfeasibleInitialization):
        initialize(scalar_cfg(), [0.0], [1.5])


def test_step_size_warning():
    with pytest.warns(UserWarning):
        ControllerConfig(scalar_system(), scalar_mas(), 0.25, q_range=(0.0, 2.0))
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        ControllerConfig(scalar_system(), scalar_mas(), 0.1, q_range=(0.0, 2.0))


# OGD step


def test_ogd_examples():
    cfg = scalar_cfg()
    assert ogd_step(cfg, state(0.3), [0.0]).tolist() == [0.3]
    assert ogd_step(cfg, state(0.0), [-1.0])[0] == pytest.approx(0.1, abs=1e-15)
    assert ogd_step(cfg, state(0.4), [-5.0])[0] == pytest.approx(0.475, abs=1e-15)


# line search


def test_line_search_no_motion():
    alpha, v = rg_line_search(scalar_cfg(), state(0.2), [0.4], [0.2])
    assert alpha == 1.0 and v.tolist() == [0.2]


def test_line_search_scalar_invariant_row():
    alpha, v = rg_line_search(scalar_cfg(), state(0.0), [0.8], [0.475])
    assert alpha == 1.0
    assert v[0] == pytest.approx(0.475)


def test_line_search_scalar_clips_on_limit_row():
    # a target beyond S_v hits |2 nu| <= 1 - eps before alpha reaches 1
    alpha, v = rg_line_search(scalar_cfg(), state(0.0), [0.0], [1.0])
    assert alpha == pytest.approx(0.5 * (1 - 1e-6), abs=1e-12)


def test_line_search_precondition():
    with pytest.raises(InfeasibleCurrentPoint):
        rg_line_search(scalar_cfg(), state(0.0), [1.5], [0.1])


def boundary_query(rng):
    """``x`` one step after a boundary point of the admissible set, held reference."""
    sys, mas = two_state_system(), two_state_mas()
    lo, hi = bounding_box(sys.S_v_bar)
    for _ in range(200):
        (v, e), = sample_members(mas, sys, 1, rng, reference_set=sys.S_v_bar)
        _, H_chi, h = mas.split()
        base = h - mas.split()[0] @ v
        rate = H_chi @ e
        pos = rate > 1e-14
        e = e * np.min(base[pos] / rate[pos])  # push e onto the boundary
        x = sys.A_K @ e + sys.S_K @ v
        far = hi if v[0] < 0.5 * (lo[0] + hi[0]) else lo
        yield v, x, far


def test_line_search_two_state_boundary_matches_bisection(rng):
    sys, mas = two_state_system(), two_state_mas()
    cfg = ControllerConfig(sys, mas, 0.1)
    found = 0
    for v, x, far in boundary_query(rng):
        alpha, v_next = rg_line_search(cfg, state(v), x, far)
        if not 0.0 < alpha < 1.0:
            continue

        def member(w):
            return mas_member_by_simulation(sys, mas.lam, mas.epsilon_tighten, w, x - sys.S_K @ w)

        assert abs(alpha - bisect_alpha(member, v, far)) <= 1e-6
        np.testing.assert_allclose(v_next, v + alpha * (far - v))
        found += 1
        if found == 10:
            break
    assert found == 10


# full step


def test_controller_step_steady_state():
    cfg = scalar_cfg()
    s = state(0.3)
    u, nxt = controller_step(cfg, s, scalar_system().S_K @ [0.3], [0.0])
    assert u.tolist() == [0.3]
    assert nxt.r.tolist() == [0.3] and nxt.v.tolist() == [0.3] and nxt.t == 2 and nxt.alpha == 1.0


def test_scalar_chain_matches_recursion():
    sys, cfg = scalar_system(), scalar_cfg()
    c = QuadraticTrackingCost([0.5], 1.0)
    expected = scalar_ogd_recursion(30)
    x = np.zeros(1)
    _, s = initialize(cfg, [0.0], x)
    rs = [s.r[0]]
    for _ in range(30):
        x, _, _ = step(sys, x, s.v)
        _, s = controller_step(cfg, s, x, steady_gradient(sys, c, s.r))
        rs.append(s.r[0])
    np.testing.assert_allclose(rs, expected, rtol=0, atol=1e-12)
    assert rs[:3] == pytest.approx([0.0, 0.1, 0.15])
    # and the closed form r_{k+1} = 0.5 r_k + 0.1
    for a, b in zip(rs, rs[1:]):
        assert b == pytest.approx(0.5 * a + 0.1, abs=1e-12)


def test_recursive_feasibility_under_aggressive_targets(rng):
    # targets far outside the admissible steady states plus a long step make the
    # reference jump across S_v_bar, which forces the governor to clip
    sys, mas = two_state_system(), two_state_mas()
    cfg = ControllerConfig(sys, mas, 1.0)
    x = np.zeros(2)
    _, s = initialize(cfg, [0.0], x)
    alphas = []
    for t in range(400):
        x, _, y = step(sys, x, s.v)
        assert contains(sys.Y, y)
        c = QuadraticTrackingCost(np.full(2, 3.0 * np.sign(np.sin(t / 15.0))), 0.0)
        _, s = controller_step(cfg, s, x, steady_gradient(sys, c, s.r))
        assert mas_contains(mas, s.v, x - sys.S_K @ s.v, tol=1e-7)
        assert contains(sys.S_v_bar, s.r)
        alphas.append(s.alpha)
    assert min(alphas) > 0
    assert min(alphas) < 1

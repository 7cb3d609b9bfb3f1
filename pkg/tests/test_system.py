import numpy as np
import pytest

from ocorg.errors import (
    DimensionMismatch,
    EmptySteadyStateSet,
    InvalidBeta,
    NotControllable,
    NotSchurStable,
    UnstablePoleRequested,
)
from ocorg.polytope import Polytope, bounding_box, chebyshev_center, contains, support
from ocorg.system import (
    LtiSystem,
    controllability_matrix,
    output_margin,
    place_poles_ackermann,
    prestabilize,
    step,
)

from conftest import random_stabilized_system, scalar_plant, scalar_system, two_input_system


# pole placement


def test_ackermann_nilpotent_already():
    K = place_poles_ackermann([[0, 1], [0, 0]], [[0], [1]], [0, 0])
    np.testing.assert_allclose(K, [[0.0, 0.0]], atol=1e-15)


def test_ackermann_scalar():
    K = place_poles_ackermann([[0.5]], [[1.0]], [0.1])
    assert K[0, 0] == pytest.approx(-0.4, abs=1e-15)


def test_ackermann_double_integrator():
    # A + BK = [[1, 1], [k1, 1 + k2]]: trace 2 + k2 = 1 and det -k1 = 0.25
    A, B = np.array([[1.0, 1.0], [0.0, 1.0]]), np.array([[0.0], [1.0]])
    K = place_poles_ackermann(A, B, [0.5, 0.5])
    np.testing.assert_allclose(K, [[-0.25, -1.0]], atol=1e-14)
    AK = A + B @ K
    assert np.trace(AK) == pytest.approx(1.0)
    assert np.linalg.det(AK) == pytest.approx(0.25)


def test_ackermann_places_distinct_poles(rng):
    for n in (2, 3, 5):
        B = np.zeros((n, 1))
        B[-1, 0] = 1.0
        A = rng.uniform(-1, 1, size=(n, n))
        poles = np.linspace(0.1, 0.3, n)
        K = place_poles_ackermann(A, B, poles)
        coeffs = np.poly(A + B @ K)
        np.testing.assert_allclose(coeffs, np.poly(poles), atol=1e-9)


def test_ackermann_errors():
    with pytest.raises(NotControllable):
        place_poles_ackermann(np.diag([0.5, 0.7]), [[0.0], [1.0]], [0.1, 0.2])
    with pytest.raises(UnstablePoleRequested):
        place_poles_ackermann([[0.5]], [[1.0]], [1.0])
    with pytest.raises(DimensionMismatch):
        place_poles_ackermann(np.eye(2), [[0.0], [1.0]], [0.1])


def test_controllability_matrix():
    C = controllability_matrix(np.array([[1.0, 1.0], [0.0, 1.0]]), np.array([[0.0], [1.0]]))
    np.testing.assert_array_equal(C, [[0.0, 1.0], [1.0, 1.0]])


# plant validation


def test_lti_system_rejects_bad_shapes():
    with pytest.raises(DimensionMismatch):
        LtiSystem(np.eye(2), np.ones((3, 1)), np.eye(2), np.zeros((2, 1)), Polytope.box([-1, -1], [1, 1]))


def test_lti_system_requires_origin_interior():
    Y = Polytope([[1.0], [-1.0]], [1.0, 0.0])  # [0, 1] touches the origin
    with pytest.raises(ValueError):
        LtiSystem([[0.5]], [[1.0]], [[1.0]], [[0.0]], Y)


def test_box_shorthand_layout():
    sys = LtiSystem.with_box_constraints(np.eye(2) * 0.5, [[0.0], [1.0]], 2.0, 3.0)
    assert sys.p == 3
    np.testing.assert_array_equal(sys.C0, [[1, 0], [0, 1], [0, 0]])
    np.testing.assert_array_equal(sys.D0, [[0], [0], [1]])
    lower, upper = bounding_box(sys.Y)
    np.testing.assert_allclose(upper, [2, 2, 3])
    np.testing.assert_allclose(lower, [-2, -2, -3])


# prestabilize


def test_prestabilize_scalar():
    sys = scalar_system()
    assert sys.S_K[0, 0] == pytest.approx(2.0, abs=1e-15)
    np.testing.assert_allclose(sys.C, [[1.0], [0.0]])
    np.testing.assert_allclose(sys.D, [[0.0], [1.0]])
    lo, hi = bounding_box(sys.S_v)
    assert (lo[0], hi[0]) == pytest.approx((-0.5, 0.5), abs=1e-12)
    lo, hi = bounding_box(sys.S_v_bar)
    assert (lo[0], hi[0]) == pytest.approx((-0.475, 0.475), abs=1e-12)
    assert sys.envelope.c == pytest.approx(1.0)
    assert sys.envelope.sigma == pytest.approx(0.5)


def test_prestabilize_deadbeat_gain_is_B():
    A = np.array([[0.2, 1.0], [0.3, -0.4]])
    B = np.eye(2)
    sys = prestabilize(LtiSystem.with_box_constraints(A, B), -A)
    np.testing.assert_array_equal(sys.A_K, np.zeros((2, 2)))
    np.testing.assert_allclose(sys.S_K, B, atol=1e-15)


def test_prestabilize_rejects_unstable_loop():
    with pytest.raises(NotSchurStable):
        prestabilize(scalar_plant(), [[0.6]])


def test_prestabilize_rejects_bad_beta():
    with pytest.raises(InvalidBeta):
        prestabilize(scalar_plant(), [[0.0]], beta=1.5)


def test_degenerate_steady_state_set():
    # outputs that ignore the plant leave the steady-state input set unconstrained
    Y = Polytope.box([-1, -1], [1, 1])
    with pytest.raises(EmptySteadyStateSet):
        prestabilize(LtiSystem([[0.5]], [[1.0]], [[0.0], [0.0]], [[0.0], [0.0]], Y), [[0.0]])


def test_steady_state_set_definition(rng):
    sys = two_input_system()
    G = sys.steady_output_map
    lo, hi = bounding_box(sys.S_v)
    for v in rng.uniform(lo, hi, size=(500, 2)):
        assert contains(sys.S_v, v) == contains(sys.Y, G @ v)


def test_reference_set_strictly_inside():
    sys = two_input_system()
    # every row of S_v keeps slack (1 - beta) times its offset at the support points of S_v_bar
    center, radius = chebyshev_center(sys.S_v_bar)
    assert radius > 0
    for a, b in zip(sys.S_v.H, sys.S_v.h):
        assert b - support(sys.S_v_bar, a) >= (1 - sys.beta) * b - 1e-12


# step


def test_step_zero():
    x, u, y = step(scalar_system(), [0.0], [0.0])
    assert x.tolist() == [0.0] and u.tolist() == [0.0] and y.tolist() == [0.0, 0.0]


def test_step_examples():
    x, u, y = step(scalar_system(), [1.0], [0.0])
    assert x.tolist() == [0.5] and u.tolist() == [0.0] and y.tolist() == [1.0, 0.0]
    x, u, y = step(scalar_system(), [0.0], [0.5])
    assert x.tolist() == [0.5] and u.tolist() == [0.5] and y.tolist() == [0.0, 0.5]


def test_step_output_two_forms_agree(rng):
    sys = two_input_system()
    for _ in range(20):
        x, v = rng.normal(size=3), rng.normal(size=2)
        _, u, y = step(sys, x, v)
        np.testing.assert_allclose(y, sys.C @ x + sys.D @ v, atol=1e-13)
        np.testing.assert_allclose(u, v + sys.K @ x, atol=1e-13)


def test_step_dimension_mismatch():
    with pytest.raises(DimensionMismatch):
        step(scalar_system(), [0.0, 0.0], [0.0])


def test_error_dynamics_follow_closed_loop(rng):
    for _ in range(10):
        sys, _ = random_stabilized_system(rng, int(rng.integers(2, 5)))
        v = rng.normal(size=1) * 0.1
        x0 = rng.normal(size=sys.n)
        e0 = x0 - sys.S_K @ v
        x = x0
        for t in range(1, 21):
            x, _, _ = step(sys, x, v)
            expected = np.linalg.matrix_power(sys.A_K, t) @ e0
            assert np.max(np.abs(x - sys.S_K @ v - expected)) <= 1e-10


def test_output_margin_sign():
    Y = Polytope.box([-1, -1], [1, 1])
    assert output_margin(Y, [0.0, 0.0]) == pytest.approx(-1.0)
    assert output_margin(Y, [1.5, 0.0]) == pytest.approx(0.5)

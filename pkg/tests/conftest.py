import functools
import warnings

import numpy as np
import pytest

from ocorg.mas import compute_lambda_mas
from ocorg.polytope import Polytope
from ocorg.system import LtiSystem, place_poles_ackermann, prestabilize


def scalar_plant():
    """x+ = 0.5 x + u with |x| <= 1, |u| <= 1."""
    return LtiSystem([[0.5]], [[1.0]], [[1.0], [0.0]], [[0.0], [1.0]], Polytope.box([-1, -1], [1, 1]))


@functools.lru_cache(maxsize=None)
def scalar_system():
    return prestabilize(scalar_plant(), [[0.0]], 0.95)


@functools.lru_cache(maxsize=None)
def scalar_mas():
    return compute_lambda_mas(scalar_system(), 0.9)


@functools.lru_cache(maxsize=None)
def two_state_system():
    A = np.array([[0.9, 0.4], [0.0, 0.8]])
    B = np.array([[0.0], [1.0]])
    K = place_poles_ackermann(A, B, [0.2, 0.3])
    return prestabilize(LtiSystem.with_box_constraints(A, B), K, 0.95)


@functools.lru_cache(maxsize=None)
def two_state_mas():
    return compute_lambda_mas(two_state_system(), 0.95)


@functools.lru_cache(maxsize=None)
def two_input_system():
    """Three states, two inputs, user-supplied stabilizing K."""
    A = np.array([[1.1, 0.2, 0.0], [0.0, 0.7, 0.3], [0.1, 0.0, 0.9]])
    B = np.array([[1.0, 0.0], [0.0, 0.5], [0.0, 1.0]])
    K = np.array([[-0.9, -0.2, 0.0], [-0.1, 0.0, -0.6]])
    return prestabilize(LtiSystem.with_box_constraints(A, B, 1.0, 1.5), K, 0.95)


@functools.lru_cache(maxsize=None)
def two_input_mas():
    return compute_lambda_mas(two_input_system(), 0.95)


def random_stabilized_system(rng, n, lam=0.95):
    """Random single-input box-constrained system with poles drawn in [0, 0.5)."""
    B = np.zeros((n, 1))
    B[-1, 0] = 1.0
    while True:
        A = rng.uniform(-1, 1, size=(n, n))
        try:
            K = place_poles_ackermann(A, B, np.sort(rng.uniform(0.0, 0.5, n)))
            sys = prestabilize(LtiSystem.with_box_constraints(A, B), K, 0.95)
            return sys, compute_lambda_mas(sys, lam)
        except Exception:
            continue


@functools.lru_cache(maxsize=None)
def example_scenario(seed, T=1000):
    from ocorg.scenario import build_scenario, generate_example
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        return build_scenario(generate_example(seed, T=T))[0]


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


_ACCEPTANCE_LINES = []


@pytest.fixture(scope="session")
def acceptance_log():
    """Collects one verdict line per acceptance criterion for the terminal summary."""
    return _ACCEPTANCE_LINES


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)

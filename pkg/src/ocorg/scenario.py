"""Scenario configuration: schema, assembly into a runnable scenario, example generator."""

import copy
import json

import jsonschema
import numpy as np

from . import controller as ctl
from .cost import CostSchedule, convexity_bounds, FrozenCost, QuadraticTrackingCost
from .errors import ConfigError, DimensionMismatch, GenerationFailed, OcorgError
from .mas import compute_lambda_mas
from .numerics import is_schur_stable, spectral_norm
from .polytope import Polytope
from .sim import Scenario
from .system import LtiSystem, place_poles_ackermann, prestabilize

EXAMPLE_POLES = [0.1, 0.15, 0.2, 0.25, 0.3]
EXAMPLE_GAMMA = 0.1

_matrix = {"type": "array", "items": {"type": "array", "items": {"type": "number"}}, "minItems": 1}
_vector = {"type": "array", "items": {"type": "number"}}
_interval = {"type": "array", "items": {"type": "number"}, "minItems": 2, "maxItems": 2}

SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "required": ["system", "controller", "cost"],
    "properties": {
        "meta": {"type": "object"},
        "system": {
            "type": "object",
            "additionalProperties": False,
            "required": ["A", "B"],
            "properties": {
                "A": _matrix, "B": _matrix, "C0": _matrix, "D0": _matrix,
                "Y": {
                    "type": "object", "additionalProperties": False, "required": ["H", "h"],
                    "properties": {"H": _matrix, "h": _vector},
                },
                "state_bound": {"type": "number", "exclusiveMinimum": 0},
                "input_bound": {"type": "number", "exclusiveMinimum": 0},
                "x0": _vector,
            },
        },
        "controller": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "K": _matrix,
                "poles": _vector,
                "lambda": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1},
                "gamma": {"type": "number", "exclusiveMinimum": 0},
                "beta": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1},
                "epsilon_tighten": {"type": "number", "exclusiveMinimum": 0, "maximum": 0.1},
                "max_horizon": {"type": "integer", "minimum": 1},
                "r0": _vector,
            },
        },
        "cost": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "schedule": {
                    "type": "object",
                    "additionalProperties": False,
                    "properties": {
                        "seed": {"type": "integer"},
                        "switch_probability": {"type": "number", "minimum": 0, "maximum": 1},
                        "q_range": _interval,
                        "z_range": _interval,
                        "sine_amplitude": {"type": "number"},
                        "sine_period": {"type": "number", "exclusiveMinimum": 0},
                    },
                },
                "frozen": {
                    "type": "object",
                    "additionalProperties": False,
                    "required": ["x_target", "q"],
                    "properties": {"x_target": _vector, "q": {"type": "number", "minimum": 0}},
                },
            },
        },
        "run": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "T": {"type": "integer", "minimum": 1},
                "seed": {"type": "integer"},
                "trace": {"type": "string"},
                "summary": {"type": "string"},
                "export_mas": {"type": "boolean"},
            },
        },
    },
}


def apply_overrides(config, overrides):
    """Apply ``dotted.key=value`` overrides; values parse as JSON when possible."""
    config = copy.deepcopy(config)
    for item in overrides or ():
        key, sep, raw = item.partition("=")
        if not sep or not key:
            raise ConfigError(f"override {item!r} is not of the form key=value")
        try:
            value = json.loads(raw)
        except json.JSONDecodeError:
            value = raw
        node = config
        *parents, leaf = key.split(".")
        for part in parents:
            node = node.setdefault(part, {})
            if not isinstance(node, dict):
                raise ConfigError(f"override {key!r} descends into a non-object")
        node[leaf] = value
    return config


def validate(config):
    try:
        jsonschema.validate(config, SCHEMA)
    except jsonschema.ValidationError as exc:
        path = ".".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ConfigError(f"{path}: {exc.message}") from exc
    system, ctrl, cost = config["system"], config["controller"], config["cost"]
    explicit = [k for k in ("C0", "D0", "Y") if k in system]
    shorthand = [k for k in ("state_bound", "input_bound") if k in system]
    if explicit and shorthand:
        raise ConfigError("system: give either C0/D0/Y or the box shorthand, not both")
    if explicit and len(explicit) != 3:
        raise ConfigError("system: C0, D0 and Y must be given together")
    if ("K" in ctrl) == ("poles" in ctrl):
        raise ConfigError("controller: give exactly one of K or poles")
    if ("schedule" in cost) == ("frozen" in cost):
        raise ConfigError("cost: give exactly one of schedule or frozen")


def load_config(path, overrides=()):
    try:
        with open(path) as fh:
            config = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from exc
    config = apply_overrides(config, overrides)
    validate(config)
    return config


def build_system(system):
    A, B = np.asarray(system["A"], dtype=float), np.asarray(system["B"], dtype=float)
    if "Y" in system:
        return LtiSystem(A, B, system["C0"], system["D0"], Polytope.from_dict(system["Y"]))
    return LtiSystem.with_box_constraints(A, B, system.get("state_bound", 1.0), system.get("input_bound", 1.0))


def build_scenario(config):
    """Assemble a :class:`Scenario` from a validated config.

    Returns ``(scenario, T)``. Shape problems in the matrices surface as
    :class:`ConfigError`; numerical failures propagate with their own type.
    """
    system, ctrl, cost, run = config["system"], config["controller"], config["cost"], config.get("run", {})
    try:
        plant = build_system(system)
    except (ValueError, OcorgError) as exc:
        raise ConfigError(f"system: {exc}") from exc
    try:
        K = ctrl["K"] if "K" in ctrl else place_poles_ackermann(plant.A, plant.B, ctrl["poles"])
        sys = prestabilize(plant, K, ctrl.get("beta", 0.95))
    except DimensionMismatch as exc:
        raise ConfigError(f"controller: {exc}") from exc
    mas = compute_lambda_mas(sys, ctrl.get("lambda", 0.95), ctrl.get("epsilon_tighten", 1e-6),
                             ctrl.get("max_horizon", 500))
    if "schedule" in cost:
        params = dict(cost["schedule"])
        params.setdefault("seed", run.get("seed", 0))
        schedule = CostSchedule(**params)
    else:
        frozen = cost["frozen"]
        schedule = FrozenCost(QuadraticTrackingCost(frozen["x_target"], frozen["q"]))
    scenario = Scenario(sys=sys, mas=mas, schedule=schedule, gamma=ctrl.get("gamma", 0.1),
                        x0=system.get("x0"), r0=ctrl.get("r0"))
    if scenario.x0.size != sys.n or scenario.r0.size != sys.m:
        raise ConfigError("x0 or r0 has the wrong length")
    # warns when gamma exceeds the step bound over the configured q range
    ctl.ControllerConfig(sys, mas, scenario.gamma, q_range=schedule.q_range)
    return scenario, int(run.get("T", 1000))


def generate_example(seed, max_attempts=1000, T=1000):
    """A five-state, single-input example with random unstable ``A``.

    ``A`` has entries uniform on ``[-1, 1]`` and is redrawn until it is not
    Schur stable, ``(A, e_5)`` is controllable, the gradient step ``0.1``
    satisfies ``gamma <= 2 / (alpha_v + l_v)`` for ``q in [0, 2]``, and the
    admissible set can be built with ``x0 = 0``, ``r0 = 0`` feasible. Raises :class:`GenerationFailed`
    after ``max_attempts`` draws.
    """
    rng = np.random.Generator(np.random.PCG64(seed))
    B = np.zeros((5, 1))
    B[-1, 0] = 1.0
    for attempt in range(1, max_attempts + 1):
        A = rng.uniform(-1.0, 1.0, size=(5, 5))
        if is_schur_stable(A):
            continue
        try:
            K = place_poles_ackermann(A, B, EXAMPLE_POLES)
            sys = prestabilize(LtiSystem.with_box_constraints(A, B), K, 0.95)
            if convexity_bounds(sys, (0.0, 2.0)).step_bound < EXAMPLE_GAMMA:
                continue
            mas = compute_lambda_mas(sys, 0.95)
        except OcorgError:
            continue
        if not ctl.check_initial_feasibility(ctl.ControllerConfig(sys, mas), np.zeros(1), np.zeros(5)):
            continue
        growth = spectral_norm(np.linalg.matrix_power(A, 64)) ** (1.0 / 64)
        return {
            "meta": {
                "generator": "ocorg gen-example",
                "seed": seed,
                "attempts": attempt,
                "spectral_radius_proxy": growth,
                "note": "spectral_radius_proxy is ||A^64||^(1/64)",
            },
            "system": {"A": A.tolist(), "B": B.tolist(), "state_bound": 1.0, "input_bound": 1.0,
                       "x0": [0.0] * 5},
            "controller": {"poles": EXAMPLE_POLES, "lambda": 0.95, "gamma": EXAMPLE_GAMMA, "beta": 0.95,
                           "epsilon_tighten": 1e-6, "r0": [0.0]},
            "cost": {"schedule": {"seed": seed, "switch_probability": 0.01, "q_range": [0.0, 2.0],
                                  "z_range": [-1.0, 1.0], "sine_amplitude": 0.2, "sine_period": 200.0}},
            "run": {"T": T, "seed": seed},
        }
    raise GenerationFailed(f"no valid scenario in {max_attempts} draws")


def dump_config(config):
    return json.dumps(config, indent=2) + "\n"

"""Online gradient descent with a reference governor for constrained linear systems."""

from .controller import ControllerConfig, ControllerState, controller_step, initialize, rg_line_search
from .cost import CostSchedule, FrozenCost, QuadraticTrackingCost
from .mas import LambdaMas, compute_lambda_mas, mas_contains
from .polytope import Polytope
from .sim import Scenario, SimulationTrace, regret_report, run_closed_loop
from .system import LtiSystem, PrestabilizedSystem, place_poles_ackermann, prestabilize

__version__ = "0.1.0"

__all__ = [
    "ControllerConfig", "ControllerState", "CostSchedule", "FrozenCost", "LambdaMas", "LtiSystem",
    "Polytope", "PrestabilizedSystem", "QuadraticTrackingCost", "Scenario", "SimulationTrace",
    "compute_lambda_mas", "controller_step", "initialize", "mas_contains", "place_poles_ackermann",
    "prestabilize", "regret_report", "rg_line_search", "run_closed_loop",
]

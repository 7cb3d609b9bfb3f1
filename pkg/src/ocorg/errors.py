"""Exception hierarchy.

Every error carries the module and operation that raised it so the CLI can
report numerical failures as ``module/operation: cause``.
"""


class OcorgError(Exception):
    module = "ocorg"
    operation = ""

    def __init__(self, message="", *, operation=None):
        super().__init__(message)
        if operation is not None:
            self.operation = operation

    @property
    def where(self):
        name = type(self).__name__
        if self.operation:
            return f"{self.module}.{self.operation}/{name}"
        return f"{self.module}/{name}"


class DimensionMismatch(OcorgError, ValueError):
    pass


# numerics
class NumericsError(OcorgError):
    module = "numerics"


class SingularMatrix(NumericsError):
    operation = "solve_linear"


class NotSchurStable(NumericsError):
    operation = "solve_discrete_lyapunov"


class NotSymmetric(NumericsError, ValueError):
    operation = "sym_eig_extremes"


# polytope
class PolytopeError(OcorgError):
    module = "polytope"


class Infeasible(PolytopeError):
    operation = "lp_solve"


class Unbounded(PolytopeError):
    operation = "lp_solve"


class IterationLimit(OcorgError):
    pass


class InvalidBeta(PolytopeError, ValueError):
    operation = "scale"


# system
class PlantError(OcorgError):
    module = "system"


class NotControllable(PlantError):
    operation = "place_poles_ackermann"


class UnstablePoleRequested(PlantError, ValueError):
    operation = "place_poles_ackermann"


class EmptySteadyStateSet(PlantError):
    operation = "prestabilize"


# mas
class MasError(OcorgError):
    module = "mas"


class LambdaTooSmall(MasError):
    operation = "compute_lambda_mas"


class HorizonExceeded(MasError):
    operation = "compute_lambda_mas"


# cost
class NotStronglyConvex(OcorgError):
    module = "cost"
    operation = "convexity_bounds"


# controller
class InfeasibleCurrentPoint(OcorgError):
    module = "controller"
    operation = "rg_line_search"


# sim
class InfeasibleInitialization(OcorgError):
    module = "sim"
    operation = "run_closed_loop"


class InvalidEpsilon(OcorgError, ValueError):
    module = "sim"
    operation = "regret_bound_constants"


class ConfigError(OcorgError, ValueError):
    module = "cli"
    operation = "load_config"


class GenerationFailed(OcorgError):
    module = "cli"
    operation = "generate_example"

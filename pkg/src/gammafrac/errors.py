"""Exception hierarchy.

Every error carries a short machine-readable ``code`` used by the CLI when it
serializes failures to JSON.
"""


class GammaFracError(Exception):
    code = "error"


class InputError(GammaFracError, ValueError):
    code = "input_error"


class DegenerateDamageLawError(InputError):
    code = "degenerate_damage_law"


class InfeasibleSigmaError(InputError):
    code = "infeasible_sigma"


class ConstructionError(InputError):
    code = "construction_error"


class NumericRecessionError(GammaFracError, ArithmeticError):
    code = "numeric_recession"


class AccuracyError(GammaFracError, ArithmeticError):
    """Quadrature did not reach its tolerance; ``estimates`` holds the last two values."""

    code = "quadrature_accuracy"

    def __init__(self, message, estimates=()):
        super().__init__(message)
        self.estimates = tuple(estimates)


class TubeOverlapError(GammaFracError, ValueError):
    code = "tube_overlap"


class ParameterError(InputError):
    code = "parameter_error"


class UnsupportedDomainError(InputError):
    code = "unsupported_domain"


class InfeasibleStateError(GammaFracError, ValueError):
    code = "infeasible_state"


class SolverBreakdownError(GammaFracError, ArithmeticError):
    code = "solver_breakdown"


class ConfigError(GammaFracError, ValueError):
    code = "config_error"

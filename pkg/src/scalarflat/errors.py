"""Exception hierarchy.

Configuration problems derive from :class:`ConfigError`; everything that can
go wrong while computing derives from :class:`NumericalFailure`.  The CLI maps
the two families to exit codes 1 and 2.
"""


class ScalarFlatError(Exception):
    code = "ScalarFlatError"


class ConfigError(ScalarFlatError, ValueError):
    code = "ConfigError"


class NumericalFailure(ScalarFlatError):
    code = "NumericalFailure"


class NoScalarFlatRadii(NumericalFailure):
    code = "NoScalarFlatRadii"


class DegenerateLink(NumericalFailure):
    code = "DegenerateLink"


class InvalidOrder(ScalarFlatError, ValueError):
    code = "InvalidOrder"


class UnsupportedFactor(NumericalFailure):
    code = "UnsupportedFactor"


class ForbiddenWeight(ConfigError):
    code = "ForbiddenWeight"


class BudgetExceeded(NumericalFailure):
    code = "BudgetExceeded"


class SolverFailure(NumericalFailure):
    code = "SolverFailure"


class DegenerateRoot(NumericalFailure):
    code = "DegenerateRoot"


class QuadratureUnderflow(NumericalFailure):
    code = "QuadratureUnderflow"


class MissingProfiles(ScalarFlatError, ValueError):
    code = "MissingProfiles"


class ImmersionFailure(NumericalFailure):
    code = "ImmersionFailure"


class NormalDegeneracy(NumericalFailure):
    code = "NormalDegeneracy"


class NonConvergence(NumericalFailure):
    code = "NonConvergence"

    def __init__(self, message, trace=None):
        super().__init__(message)
        self.trace = list(trace or [])


class NotUnstable(NumericalFailure):
    code = "NotUnstable"


class ZeroDenominator(NumericalFailure):
    code = "ZeroDenominator"


class DecayClassViolation(UserWarning):
    """Right-hand side decays slower near the tip than the admissible class."""

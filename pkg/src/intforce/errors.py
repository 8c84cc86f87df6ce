"""Exception hierarchy.

Every failure mode named by the toolkit is its own subclass so callers (and
the CLI) can dispatch on type instead of parsing messages.
"""


class IntForceError(Exception):
    """Base class for all toolkit errors."""


class ConfigError(IntForceError, ValueError):
    """A configuration violates a type invariant."""


class DimensionMismatch(ConfigError):
    pass


class PowerBudgetExceeded(ConfigError):
    pass


class RankDeficientIntegerMatrix(ConfigError):
    pass


class ComplexInputRejected(ConfigError):
    pass


class NonpositivePower(IntForceError, ValueError):
    pass


class NumericallySingularGram(IntForceError, ArithmeticError):
    pass


class UnboundedRate(IntForceError, ArithmeticError):
    """Zero effective noise (or zero interference-plus-noise) with positive power."""


class NonpositiveBeta(IntForceError, ValueError):
    pass


class NotZMatrix(IntForceError, ValueError):
    pass


class NotMMatrix(IntForceError, ArithmeticError):
    """The requested SINR profile is infeasible for this geometry."""


class InfeasibleDualityStep(IntForceError, ArithmeticError):
    pass


class DegenerateBeta(IntForceError, ArithmeticError):
    pass


class MultiAntennaUserUnsupported(IntForceError, ValueError):
    pass


class SingularModP(IntForceError, ArithmeticError):
    pass


class ZeroLeadingMinor(IntForceError, ArithmeticError):
    pass


class VerificationFailed(IntForceError, AssertionError):
    pass


class PrimeSearchExhausted(IntForceError, RuntimeError):
    pass

"""Exception hierarchy shared by all modules."""


class PolystabError(Exception):
    """Base class for every error raised by this package."""


class DimensionError(PolystabError, ValueError):
    """Operands have incompatible shapes or index types."""


class NumericalError(PolystabError):
    """A numerical procedure could not deliver its contract."""


class ConvergenceError(NumericalError):
    """An iteration exceeded its sweep budget without converging."""


class ExponentOverflow(NumericalError, OverflowError):
    """An integer quantity left the signed 64-bit range."""


class BudgetExceeded(NumericalError):
    """A requested computation is larger than the configured budget."""


class NegativeValue(PolystabError, ValueError):
    """A polynomial that should map into the nonnegative integers did not."""


class NormalizationError(PolystabError, ValueError):
    """A sequence violates the unit-ball normalization ``||h_n|| <= 1``."""


class ConfigError(PolystabError, ValueError):
    """An experiment configuration failed validation."""

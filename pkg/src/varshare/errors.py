"""Exception and warning types shared across the package."""


class VarshareError(Exception):
    """Base class for all errors raised by this package."""


class DimensionError(VarshareError, ValueError):
    """A player count, index, or array shape is out of range or inconsistent."""


class ContractError(VarshareError, ValueError):
    """An argument violates a documented precondition."""


class PositivityError(VarshareError, ValueError):
    """A value that must be strictly positive is zero or negative."""


class ComplexityGuardError(VarshareError, ValueError):
    """A factorial- or exponential-cost routine was called above its size cap."""


class DegenerateGameError(VarshareError, ArithmeticError):
    """The game carries no value to share (grand coalition at or below the zero threshold)."""


class LinearAlgebraError(VarshareError, ArithmeticError):
    """A matrix factorization or solve failed (typically a non-PD covariance)."""


class TableParseError(VarshareError, ValueError):
    """A value-table or dataset file is malformed or incomplete."""


class NonMonotoneGameWarning(UserWarning):
    """The supplied game violates monotonicity; results may lose their guarantees."""

"""Exception types shared across the package.

Two families: invalid or inconsistent inputs (``DataValidationError`` and
subclasses) and numerical breakdowns encountered while computing
(``NumericalError`` and subclasses).  Command line entry points map these
to exit codes 2 and 3 respectively.
"""


class DataValidationError(ValueError):
    """Input data or configuration violates a documented requirement."""


class DegenerateArmError(DataValidationError):
    """A declared treatment arm never occurs among available decision points."""


class PositivityError(DataValidationError):
    """A randomization probability is zero (or out of [0, 1]) where a
    positive one is required."""


class NullContrastError(DataValidationError):
    """A contrast matrix has a zero row or no rows after reduction."""


class NumericalError(RuntimeError):
    """A numerical routine could not produce a trustworthy result."""


class SingularSystemError(NumericalError):
    """A matrix that must be solved is singular or too ill conditioned."""


class ConvergenceError(NumericalError):
    """An iterative routine exhausted its iteration budget."""

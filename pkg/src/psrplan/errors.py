"""Exception types shared across the package."""


class PsrPlanError(Exception):
    """Base class for all errors raised by this package."""


class ValidationError(PsrPlanError):
    """A model or argument violates a structural invariant."""


class ParseError(PsrPlanError):
    """A .POMDP file could not be parsed.

    Carries the 1-based line number of the offending construct when known.
    """

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class UnsupportedConstructError(ParseError):
    """The file uses a construct outside the supported model class."""


class DegenerateBasisError(PsrPlanError):
    """The basis matrix is too ill-conditioned to solve against."""


class StateCapExceededError(PsrPlanError):
    """Grid expansion hit the state cap; retry with a coarser mesh."""


class OracleBudgetError(PsrPlanError):
    """The exact solver exceeded its node budget."""


class ConvergenceError(PsrPlanError):
    """Value iteration failed to converge within the iteration cap."""

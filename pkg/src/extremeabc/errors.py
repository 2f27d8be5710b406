"""Exception hierarchy.

Each class carries the CLI exit code used when it escapes a subcommand:
3 for bad input data, 4 for numerical failures.
"""


class ExtremeABCError(Exception):
    exit_code = 1


class DataError(ExtremeABCError, ValueError):
    exit_code = 3


class ParameterDomainError(DataError):
    """A parameter or argument lies outside its mathematical domain."""


class ScaleError(DataError):
    """A panel is on the wrong margin scale for the requested operation."""


class DesignError(DataError):
    """Objects built on different spatial designs were combined."""


class ParseError(DataError):
    pass


class SchemaError(DataError):
    pass


class TransformError(DataError):
    def __init__(self, message, block=None, site=None):
        super().__init__(message)
        self.block = block
        self.site = site


class NumericalError(ExtremeABCError, ArithmeticError):
    exit_code = 4


class FitError(NumericalError):
    """An optimizer failed from every start; ``diagnostics`` holds per-start traces."""

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics or []


class FactorizationError(NumericalError):
    pass


class SimulationBudgetError(NumericalError):
    pass


class FeasibilityError(ExtremeABCError):
    exit_code = 3

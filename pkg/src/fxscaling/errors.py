"""Exception hierarchy shared by all modules.

Each family maps onto one CLI exit code, see :mod:`fxscaling.cli`.
"""


class FxScalingError(Exception):
    """Base class for every error raised by this package."""


class ParseError(FxScalingError):
    """Tick input could not be parsed."""

    def __init__(self, message, rejects=None):
        super().__init__(message)
        self.rejects = list(rejects or [])


class OrderingError(ParseError):
    def __init__(self, line_number, message=None):
        super().__init__(message or f"timestamp out of order at line {line_number}")
        self.line_number = line_number


class EmptyStreamError(ParseError):
    pass


class SelectionError(FxScalingError):
    """A pair filter selected nothing."""


class GeometryError(FxScalingError):
    """Window, bin width or lag geometry is inconsistent."""


class CoverageError(GeometryError):
    pass


class EmptyPlanError(GeometryError):
    pass


class DegenerateError(FxScalingError):
    """Not enough usable data for a statistic to be defined."""


class InsufficientDataError(DegenerateError):
    pass


class BootstrapDegeneracyError(DegenerateError):
    pass


class SpecError(FxScalingError):
    """Invalid synthetic generator specification."""

"""Exception types raised by wqlab."""


class WqlabError(Exception):
    """Base class for all wqlab errors."""


class InfeasibleError(WqlabError, ValueError):
    """The two measures do not carry the same total mass."""


class CapacityError(WqlabError):
    """A problem exceeds a configured size cap."""


class UnsupportedError(WqlabError, ValueError):
    """The requested combination of inputs is not supported."""


class SupportViolationError(WqlabError, ValueError):
    """A cell carries target mass but no reference mass."""

    def __init__(self, message: str, cell=None):
        super().__init__(message)
        self.cell = cell


class ArityError(WqlabError, ValueError):
    """Per-cell target counts do not add up to the number of points."""


class RegimeError(WqlabError, ValueError):
    """Parameters lie outside the range where a constant is defined."""


class DomainError(WqlabError, ValueError):
    """A value outside the domain of a fit or transform."""


class IncompleteDataError(WqlabError, ValueError):
    """A report was requested from summaries lacking required fields."""


class ConfigError(WqlabError, ValueError):
    """An experiment configuration is malformed."""

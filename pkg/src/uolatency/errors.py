"""Exception hierarchy shared by all modules."""


class UoLatencyError(Exception):
    """Base class for every error raised by this package."""


class ValidationError(UoLatencyError, ValueError):
    """A value violates a domain constraint.

    ``field`` names the offending attribute so callers can point at it.
    """

    def __init__(self, field, message):
        self.field = field
        super().__init__(f"{field}: {message}")


class TopologyError(UoLatencyError):
    """A message cannot be routed over the given topology."""


class DegenerateProcedureError(UoLatencyError, ValueError):
    """The procedure never crosses the backhaul, so distance has no effect."""

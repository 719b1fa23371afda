"""Exception hierarchy for the ihh package."""


class IhhError(Exception):
    """Base class for all errors raised by this package."""


class InvalidInstanceError(IhhError, ValueError):
    """Structural problem with a network, commodity set or route."""


class InstanceFormatError(IhhError, ValueError):
    """Malformed instance or solution file."""

    def __init__(self, message: str, line: int | None = None) -> None:
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class NegativeCostError(IhhError, ValueError):
    """A cost oracle produced a negative arc cost."""


class OracleLimitError(IhhError, RuntimeError):
    """Instance is too large for exhaustive solving."""


class GeneratorError(IhhError, ValueError):
    """Generator specification cannot be satisfied."""

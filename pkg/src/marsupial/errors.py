"""Exception hierarchy shared by the simulator modules."""


class SimulationError(Exception):
    """Base class for every error raised by the package."""


class ConfigError(SimulationError, ValueError):
    """A scenario or trajectory document is invalid."""


class ParseError(ConfigError):
    """The document could not be parsed; carries a location when known."""

    def __init__(self, message, line=None, column=None):
        self.line = line
        self.column = column
        if line is not None:
            loc = f"line {line}" + (f", column {column}" if column is not None else "")
            message = f"{message} ({loc})"
        super().__init__(message)


class SchemaError(ConfigError):
    """A parsed document is missing a field or has a field of the wrong shape."""

    def __init__(self, message, field=None):
        self.field = field
        super().__init__(message)


class InvalidParams(SimulationError, ValueError):
    pass


class InvalidTarget(SimulationError, ValueError):
    pass


class LengthTooShort(SimulationError, ValueError):
    pass


class NumericalFailure(SimulationError, RuntimeError):
    pass


class NumericalDivergence(SimulationError, RuntimeError):
    pass


class Timeout(SimulationError):
    """Raised when a scenario does not reach all targets before its timeout.

    The partial log is attached so callers can still write it out.
    """

    def __init__(self, message, log=None):
        self.log = log
        super().__init__(message)


class EmptyLog(SimulationError, ValueError):
    pass


class ElementLengthUnsupported(ConfigError):
    pass

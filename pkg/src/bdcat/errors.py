"""Exception hierarchy shared by all bdcat modules."""


class BdcatError(Exception):
    """Base class for every error raised by this package."""


class ParameterError(BdcatError, ValueError):
    """A generator, embedding or protocol parameter is out of range."""


class ParseError(BdcatError, ValueError):
    """Malformed edge list, trace file or configuration."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class StateError(BdcatError, RuntimeError):
    """An operation was applied to a node in the wrong online/offline state."""


class CapacityError(BdcatError):
    """An interval assignment would produce an empty interval (b too small)."""


class DepthError(BdcatError):
    """A coordinate would exceed the configured address length L."""


class GreedyViolation(BdcatError):
    """Greedy routing terminated somewhere other than the closest node."""


class EmbeddingViolation(BdcatError):
    """The closest node to an address is not unique."""


class ConsistencyError(BdcatError, AssertionError):
    """Cached protocol state disagrees with a from-scratch recomputation."""


class ConfigError(BdcatError, ValueError):
    """Invalid sweep or simulation configuration; ``path`` names the field."""

    def __init__(self, message: str, path: str | None = None):
        self.path = path
        if path:
            message = f"{path}: {message}"
        super().__init__(message)

"""Exception hierarchy shared by every stage of the pipeline."""


class ReliefLayoutError(Exception):
    """Base class for all errors raised by this package."""


class InvalidMatrix(ReliefLayoutError):
    pass


class InstanceTooSmall(ReliefLayoutError):
    pass


class DimensionError(ReliefLayoutError, ValueError):
    pass


class DegenerateRange(ReliefLayoutError, ValueError):
    pass


class EmptyDataset(ReliefLayoutError):
    pass


class EmptyInput(ReliefLayoutError):
    pass


class UnknownScenario(ReliefLayoutError):
    pass


class NotEvaluated(ReliefLayoutError):
    pass


class SpaceTooLarge(ReliefLayoutError):
    def __init__(self, size: int, limit: int):
        super().__init__(f"search space has {size} candidates, limit is {limit}")
        self.size = size
        self.limit = limit


class SchemaError(ReliefLayoutError):
    """A CSV/JSON input does not match its documented schema."""


class IntegrityError(ReliefLayoutError):
    """An input references an id that does not exist."""


class RangeError(ReliefLayoutError, ValueError):
    """A value is outside its documented range (negative capacity, ...)."""


class ConfigError(ReliefLayoutError):
    pass


class IoError(ReliefLayoutError, OSError):
    """An output file or directory cannot be written."""


class BundleWarning(UserWarning):
    """A bundle loaded, but a stored derived value disagrees with its inputs."""

"""Exception types shared across the package."""


class BoundsError(IndexError):
    """A coordinate index lies outside its tensor's shape."""


class RangeError(ValueError):
    """A linearized key is outside the sub-space it should decode into."""


class SizeError(ValueError):
    """A dense realization would exceed the configured element budget."""


class CapacityError(RuntimeError):
    """A fixed-capacity accumulator was asked to hold more keys than it has slots."""


class ParseError(ValueError):
    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)

"""Exception hierarchy shared by every module."""


class InfinipatchError(Exception):
    """Base class for all errors raised by the package."""


class ShapeError(InfinipatchError, ValueError):
    """Tensor shapes are incompatible with the requested operation."""


class ConfigError(InfinipatchError, ValueError):
    """An engine configuration is malformed or geometrically inconsistent."""


class UnachievableSizeError(ShapeError):
    """No z_S size maps onto the requested output size.

    ``nearest`` holds the closest achievable output sizes (below, above).
    """

    def __init__(self, size, nearest):
        self.size = size
        self.nearest = tuple(nearest)
        super().__init__(
            f"output size {size} is not achievable; nearest achievable sizes: "
            + ", ".join(str(n) for n in self.nearest)
        )

    def __reduce__(self):
        return type(self), (self.size, self.nearest)


class WeightFileError(InfinipatchError):
    """Base class for weight file problems."""


class WeightsNotFoundError(WeightFileError, FileNotFoundError):
    pass


class CorruptHeaderError(WeightFileError):
    pass


class TruncatedWeightFileError(WeightFileError):
    pass


class WeightShapeMismatchError(WeightFileError):
    def __init__(self, name, expected, found):
        self.name = name
        self.expected = expected
        self.found = found
        super().__init__(f"shape mismatch for {name!r}: expected {expected}, found {found}")

    def __reduce__(self):
        return type(self), (self.name, self.expected, self.found)


class JobError(InfinipatchError, RuntimeError):
    """A patch job failed; ``job_id`` identifies it within its plan."""

    def __init__(self, job_id, cause):
        self.job_id = job_id
        self.cause = cause
        super().__init__(f"job {job_id} failed: {cause!r}")

    def __reduce__(self):
        return type(self), (self.job_id, self.cause)


class SinkError(InfinipatchError, OSError):
    """Writing rendered rows to the output sink failed."""


class NumericError(InfinipatchError, ArithmeticError):
    """A function under evaluation returned a non-finite value."""

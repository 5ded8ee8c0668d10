"""Exception types shared across the rampinn package."""


class RamPinnError(Exception):
    """Base class for all rampinn errors."""


class AllZeroSignal(RamPinnError):
    """Raised when normalising a signal whose maximum magnitude is zero."""


class LengthMismatch(RamPinnError):
    """Raised when vector or grid lengths are incompatible (or empty)."""


class ShapeMismatch(RamPinnError):
    """Raised when tensor shapes are incompatible with an operation."""


class DegenerateBackground(RamPinnError):
    """Raised when a sampled background curve is constant and cannot be rescaled."""


class NonPositiveReference(RamPinnError):
    """Raised when a reference spectrum is non-positive on most of the grid."""


class NonFiniteGradient(RamPinnError):
    """Raised when a gradient contains NaN or Inf, signalling a diverged run."""

    def __init__(self, message: str = "non-finite gradient", epoch: int | None = None):
        super().__init__(message if epoch is None else f"{message} (epoch {epoch})")
        self.epoch = epoch


class BadWindow(RamPinnError):
    """Raised for invalid smoothing-window parameters."""


class EmptyInput(RamPinnError):
    """Raised when an aggregate is requested over an empty collection."""

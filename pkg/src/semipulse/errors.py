"""Exception types shared across the package."""


class PulseError(Exception):
    """Base class for all semipulse errors."""


class NonFiniteInput(PulseError):
    """An input signal contains NaN or Inf samples."""


class DegenerateSignal(PulseError):
    """A signal carries no frequency information (constant, or zero band power)."""


class ConstantSignal(PulseError):
    """A signal has zero variance where variance is required (Pearson)."""


class LengthMismatch(PulseError):
    """Two signals that must share a length do not."""


class ShapeMismatch(PulseError):
    """Tensor operands have incompatible shapes."""


class NonFiniteValue(PulseError):
    """A tensor operation produced NaN or Inf (fail fast)."""


class InvalidSpec(PulseError):
    """A model or generator spec violates its invariants."""


class EpochOutOfRange(PulseError):
    """Requested epoch index falls outside the schedule's range."""


class CorruptFile(PulseError):
    """A clip file fails its magic/length checks."""


class VersionMismatch(PulseError):
    """A clip file was written by an unsupported format version."""


class NonFiniteGradient(PulseError):
    """An optimizer step received NaN/Inf gradients and was aborted."""


class ConfigError(PulseError):
    """A run configuration is invalid (unknown key, bad value, protocol clash)."""


class DivergenceError(PulseError):
    """Training loss stayed non-finite for several consecutive epochs."""


class ClampSaturationWarning(UserWarning):
    """More than 10% of generated pixel samples hit the [0, 1] clamp."""

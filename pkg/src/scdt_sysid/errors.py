"""Exception types shared across the package."""


class ScdtSysIdError(Exception):
    """Base class for all package errors."""


class ZeroSignal(ScdtSysIdError):
    """A transform was requested for a signal with zero total mass."""


class NegativeInput(ScdtSysIdError):
    """A nonnegative signal was required but negative samples were found."""


class NonMonotone(ScdtSysIdError):
    """Quantile values decrease beyond tolerance; cannot invert."""


class NonIncreasingWarp(ScdtSysIdError):
    """A time warp must be strictly increasing on its sampled support."""


class DimensionMismatch(ScdtSysIdError):
    """Array shapes or reference grids do not agree."""


class OutOfSupport(ScdtSysIdError):
    """Evaluation requested outside a model's declared time support."""


class NonPositiveShift(ScdtSysIdError):
    """Measured signal does not lag the template; speed is undefined."""


class StabilityError(ScdtSysIdError):
    """Time step violates the documented stability bound."""


class Instability(ScdtSysIdError):
    """Solution norm blew up during time integration."""


class BadSensorLocation(ScdtSysIdError):
    """Sensor position does not coincide with a spatial grid point."""


class EmptyClass(ScdtSysIdError):
    """A training class has no samples."""


class ZeroVectorSample(ScdtSysIdError):
    """A training sample is the zero vector and spans no subspace."""


class TooFewSamples(ScdtSysIdError):
    """Not enough samples to perform the requested split."""

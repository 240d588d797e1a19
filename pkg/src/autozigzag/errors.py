"""Exception types raised across the package."""

import numpy as np


class AutoZigZagError(Exception):
    """Base class for package errors."""


class NonFiniteGradient(AutoZigZagError, FloatingPointError):
    """The potential or one of its partial derivatives is not finite at ``x``."""

    def __init__(self, x, value=None, gradient=None):
        self.x = np.array(x, dtype=float, copy=True)
        self.value = value
        self.gradient = None if gradient is None else np.array(gradient, copy=True)
        super().__init__(f"non-finite potential or gradient at x={self.x.tolist()}")


class InvalidCovariance(AutoZigZagError, ValueError):
    pass


class InvalidMixture(AutoZigZagError, ValueError):
    pass


class EmptyDataset(AutoZigZagError, ValueError):
    pass


class InvalidSurvivalTime(AutoZigZagError, ValueError):
    pass


class DegenerateSelection(AutoZigZagError, ValueError):
    """Multinomial dimension choice requested with an all-zero rate vector."""


class DegenerateParabola(AutoZigZagError, ZeroDivisionError):
    """The three interpolation points are collinear."""


class GlobalBoundViolated(AutoZigZagError, RuntimeError):
    """A caller-supplied global rate bound was exceeded during thinning."""

    def __init__(self, rate, bound, time):
        self.rate = rate
        self.bound = bound
        self.time = time
        super().__init__(
            f"global rate {rate!r} exceeds the supplied bound {bound!r} at t={time!r}"
        )


class QueryOutOfRange(AutoZigZagError, ValueError):
    pass


class EmptyTrajectory(AutoZigZagError, ValueError):
    pass


class ConfigError(AutoZigZagError, ValueError):
    """Malformed run configuration (CLI exit status 2)."""

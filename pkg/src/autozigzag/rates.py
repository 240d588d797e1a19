"""Switching rates, dimension selection and the velocity flip."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._backend import kernels
from .autodiff import Potential, gradient
from .errors import DegenerateSelection

__all__ = ["State", "RateContext", "dim_rate", "global_rate", "choose_dimension", "flip"]


@dataclass(frozen=True)
class State:
    time: float
    position: np.ndarray
    velocity: np.ndarray

    def __post_init__(self):
        x = np.array(self.position, dtype=float)
        v = np.array(self.velocity, dtype=float)
        if x.shape != v.shape or x.ndim != 1:
            raise ValueError("position and velocity must be vectors of equal length")
        if not np.isfinite(x).all():
            raise ValueError("position must be finite")
        if not np.all(np.abs(v) == 1.0):
            raise ValueError("velocity entries must be exactly +1 or -1")
        if self.time < 0:
            raise ValueError("time must be nonnegative")
        object.__setattr__(self, "position", x)
        object.__setattr__(self, "velocity", v)

    @property
    def dimension(self):
        return self.position.shape[0]


class RateContext:
    """Rates along the ray ``x_s + v_s t`` from a fixed start state.

    ``evals`` counts gradient passes made through :func:`global_rate`.
    ``refresh`` is an optional constant excess rate per dimension.
    """

    __slots__ = ("potential", "x", "v", "refresh", "evals")

    def __init__(self, potential: Potential, x, v, refresh=None):
        self.potential = potential
        self.x = np.asarray(x, dtype=float)
        self.v = np.asarray(v, dtype=float)
        if refresh is not None:
            refresh = np.broadcast_to(np.asarray(refresh, dtype=float), self.x.shape)
            if (refresh < 0).any():
                raise ValueError("refresh rates must be nonnegative")
            if not refresh.any():
                refresh = None
        self.refresh = refresh
        self.evals = 0

    @classmethod
    def from_state(cls, potential, state: State, refresh=None):
        return cls(potential, state.position, state.velocity, refresh)

    def per_dim(self, t):
        g = gradient(self.potential, self.x + self.v * t)
        r = np.maximum(self.v * g, 0.0)
        if self.refresh is not None:
            r = r + self.refresh
        return r


def dim_rate(ctx: RateContext, i: int, t: float) -> float:
    """Rate of flips of coordinate ``i`` (0-based) at elapsed time ``t``."""
    return float(ctx.per_dim(t)[i])


def global_rate(ctx: RateContext, t: float):
    """``(total, per_dim)`` at elapsed time ``t``; one gradient pass."""
    r = ctx.per_dim(t)
    ctx.evals += 1
    return float(r.sum()), r


def choose_dimension(per_dim, u: float) -> int:
    """Dimension to flip, drawn with probability proportional to its rate.

    Deterministic given the uniform ``u``: the first index whose cumulative
    rate exceeds ``u * total``.
    """
    i = kernels.choose_index(np.asarray(per_dim, dtype=float), float(u))
    if i < 0:
        raise DegenerateSelection("all switching rates are zero")
    return int(i)


def flip(v, m: int) -> np.ndarray:
    """Copy of ``v`` with the sign of component ``m`` inverted."""
    out = np.array(v, dtype=float, copy=True)
    out[m] = -out[m]
    return out

"""Local upper bounds on the switching rate via a modified Brent search."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Callable, NamedTuple

from ._backend import kernels
from .errors import DegenerateParabola
from .rates import RateContext, global_rate

__all__ = [
    "BrentConfig",
    "BoundEstimate",
    "BrentResult",
    "NotConverged",
    "parabolic_vertex",
    "brent_max",
    "local_bound",
    "maximize_rate",
    "SAFETY",
    "SAFETY_NOT_CONVERGED",
]

SAFETY = 1.0 + 1e-9
SAFETY_NOT_CONVERGED = 1.05


class NotConverged(RuntimeWarning):
    """Brent hit its iteration cap; the bound was inflated instead."""


@dataclass(frozen=True)
class BrentConfig:
    """Search settings. ``None`` tolerances scale with the horizon:
    abscissa tolerance ``1e-6 * t_max`` and end probe ``1e-4 * t_max``.

    Brent's method finds a local maximum only. ``check_ends`` also evaluates
    both interval ends (at most two extra evaluations), which catches rates
    that dip and rise again inside the horizon.
    """

    tolerance: float | None = None
    max_iters: int = 100
    epsilon_probe: float | None = None
    shortcut: bool = True
    check_ends: bool = False

    def resolve(self, t_max: float) -> tuple[float, float]:
        tol = self.tolerance if self.tolerance is not None else 1e-6 * t_max
        eps = self.epsilon_probe if self.epsilon_probe is not None else 1e-4 * t_max
        if tol <= 0 or eps <= 0:
            raise ValueError("tolerance and epsilon_probe must be positive")
        return tol, eps


@dataclass(frozen=True)
class BoundEstimate:
    bound: float
    horizon: float
    evals_used: int
    shortcut: bool
    converged: bool = True
    argmax: float = math.nan


class BrentResult(NamedTuple):
    argmax: float
    max: float
    evals: int
    converged: bool
    shortcut: bool


def parabolic_vertex(a, fa, b, fb, c, fc) -> float:
    """Vertex abscissa of the parabola through ``(a, fa), (b, fb), (c, fc)``."""
    x = kernels.parabolic_vertex(float(a), float(fa), float(b), float(fb), float(c), float(fc))
    if math.isnan(x):
        raise DegenerateParabola("interpolation points are collinear")
    return x


def brent_max(f: Callable[[float], float], lo: float, hi: float,
              cfg: BrentConfig | None = None) -> BrentResult:
    """Maximise a scalar function on ``[lo, hi]``.

    Never evaluates ``f`` outside the interval. ``converged`` is false when
    ``cfg.max_iters`` was reached; the best point seen is returned anyway.
    """
    cfg = cfg or BrentConfig()
    if not hi > lo:
        raise ValueError("need lo < hi")
    tol, eps = cfg.resolve(hi - lo)
    t, fmax, nev, conv, short = kernels.modified_brent_max(
        f, float(lo), float(hi), tol, int(cfg.max_iters), eps, bool(cfg.shortcut)
    )
    if cfg.check_ends:
        for end in (lo, hi):
            if t != end:
                f_end = f(end)
                nev += 1
                if f_end > fmax:
                    t, fmax = end, f_end
    return BrentResult(t, fmax, nev, conv, short)


def maximize_rate(f: Callable[[float], float], t_max: float,
                  cfg: BrentConfig | None = None) -> BoundEstimate:
    """Bound ``f`` on ``[0, t_max]`` and apply the safety inflation."""
    if not t_max > 0:
        raise ValueError("t_max must be positive")
    res = brent_max(f, 0.0, t_max, cfg)
    if res.converged:
        bound = res.max * SAFETY
    else:
        warnings.warn("rate maximisation did not converge; bound inflated", NotConverged,
                      stacklevel=3)
        bound = res.max * SAFETY_NOT_CONVERGED
    return BoundEstimate(max(bound, 0.0), t_max, res.evals, res.shortcut, res.converged,
                         res.argmax)


def local_bound(ctx: RateContext, t_max: float, cfg: BrentConfig | None = None) -> BoundEstimate:
    """Upper bound of the global rate over ``[0, t_max]`` from ``ctx``'s state.

    Every rate evaluation goes through :func:`global_rate` and is counted in
    ``evals_used``.
    """
    return maximize_rate(lambda t: global_rate(ctx, t)[0], t_max, cfg)

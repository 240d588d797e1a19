"""Budget counters, trajectory moments and effective sample sizes.

The effective sample size of a continuous trajectory is estimated by
discretising it on a regular grid and applying batch means to the grid
values; discrete chains go straight to batch means. Reports carry the
method tag so the two are never confused.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ._backend import kernels
from .errors import EmptyTrajectory

__all__ = [
    "BudgetCounters",
    "EssReport",
    "batch_means_ess",
    "trajectory_mean",
    "trajectory_moments",
    "trajectory_velocity_mean",
    "ess_continuous",
    "ess_discrete",
    "mc_standard_error",
    "TuningResult",
    "tune_tmax",
    "DEFAULT_BURN_IN",
]

DEFAULT_BURN_IN = 0.1
CONTINUOUS = "continuous-discretized"
DISCRETE = "batch-means-discrete"


@dataclass
class BudgetCounters:
    """Evaluations spent on rate bounds and on thinning proposals.

    ``unit`` is ``"gradient"`` for full gradients or ``"term"`` for
    per-observation terms (subsampled runs).
    """

    opt_evals: int = 0
    tpp_evals: int = 0
    unit: str = "gradient"

    @property
    def total(self) -> int:
        return self.opt_evals + self.tpp_evals

    def as_dict(self):
        return {"opt_evals": self.opt_evals, "tpp_evals": self.tpp_evals, "total": self.total,
                "unit": self.unit}


@dataclass(frozen=True)
class EssReport:
    per_dimension: np.ndarray
    method: str
    n: int
    zero_variance: np.ndarray = field(default=None)

    @property
    def minimum(self) -> float:
        return float(np.min(self.per_dimension))

    def as_dict(self):
        return {
            "per_dimension": [float(e) for e in self.per_dimension],
            "minimum": self.minimum,
            "method": self.method,
            "n": self.n,
            "zero_variance": [bool(z) for z in self.zero_variance],
        }


def batch_means_ess(samples, method: str = DISCRETE) -> EssReport:
    """Batch-means ESS per column with ``floor(sqrt(n))`` batches.

    ``ESS = n var / (b var_batch)`` clipped to ``n``. A column with zero
    variance gets ``ESS = n`` and is flagged.
    """
    Y = np.asarray(samples, dtype=float)
    if Y.ndim == 1:
        Y = Y[:, None]
    n = Y.shape[0]
    if n < 4:
        raise ValueError("need at least 4 samples for batch means")
    a = math.isqrt(n)
    var, var_b, b, m = kernels.batch_means(Y, a)
    var = np.asarray(var)
    var_b = np.asarray(var_b)
    zero = var <= 0.0
    with np.errstate(divide="ignore", invalid="ignore"):
        ess = np.where(var_b > 0, m * var / (b * var_b), float(m))
    ess = np.where(zero, float(m), np.minimum(ess, float(m)))
    return EssReport(ess, method, m, zero)


def _burn(skel, burn_in_time):
    if burn_in_time is None:
        burn_in_time = DEFAULT_BURN_IN * skel.total_time
    if not burn_in_time < skel.total_time:
        raise ValueError("burn-in must be shorter than the trajectory")
    return burn_in_time


def trajectory_moments(skel, burn_in_time: float | None = 0.0):
    """Time-averaged mean vector and covariance matrix of the trajectory."""
    if skel.total_time <= 0:
        raise EmptyTrajectory("trajectory has zero duration")
    b = _burn(skel, burn_in_time)
    times, X, V = skel.nodes()
    ix, ixx, dur = kernels.segment_moments(times, X, V, b, skel.total_time)
    mean = np.asarray(ix) / dur
    cov = np.asarray(ixx) / dur - np.outer(mean, mean)
    return mean, cov


def trajectory_mean(skel, coordinate: int | None = None, burn_in_time: float | None = 0.0):
    """Exact time average of ``x`` along the piecewise-linear trajectory."""
    mean, _ = trajectory_moments(skel, burn_in_time)
    return float(mean[coordinate]) if coordinate is not None else mean


def trajectory_velocity_mean(skel, burn_in_time: float | None = 0.0):
    b = _burn(skel, burn_in_time)
    from .zigzag import interpolate

    return (skel.final.position - interpolate(skel, b)) / (skel.total_time - b)


def ess_continuous(skel, n: int = 100_000, burn_in_time: float | None = None) -> EssReport:
    """ESS of the coordinate functions of a Zig-Zag trajectory.

    The post-burn-in trajectory is evaluated at ``n`` equally spaced times
    and batch means is applied to the grid values.
    """
    if n < 100:
        raise ValueError("grid must have at least 100 points")
    b = _burn(skel, burn_in_time)
    grid = np.linspace(b, skel.total_time, n)
    times, X, V = skel.nodes()
    Y = kernels.positions_at(times, X, V, grid)
    return batch_means_ess(Y, CONTINUOUS)


def ess_discrete(chain, burn_in_iters: int | None = None) -> EssReport:
    chain = np.asarray(chain, dtype=float)
    if chain.ndim == 1:
        chain = chain[:, None]
    if burn_in_iters is None:
        burn_in_iters = int(DEFAULT_BURN_IN * chain.shape[0])
    return batch_means_ess(chain[burn_in_iters:], DISCRETE)


def mc_standard_error(skel, n: int = 100_000, burn_in_time: float | None = None):
    """Monte Carlo standard errors of the trajectory means (per coordinate)."""
    b = _burn(skel, burn_in_time)
    mean, cov = trajectory_moments(skel, b)
    ess = ess_continuous(skel, n, b).per_dimension
    return np.sqrt(np.diag(cov) / ess)


@dataclass
class TuningResult:
    candidates: list
    rows: list  # (t_max, replicate, total_evals per 1000 skeleton points)
    summary: dict  # t_max -> (q1, median, q3)
    selected: float

    def table(self):
        return [
            {"t_max": t, "q1": s[0], "median": s[1], "q3": s[2]}
            for t, s in self.summary.items()
        ]


def tune_tmax(target, candidates, pilot_K: int = 1000, replicates: int = 100, seed=0,
              x0=None, v0=None, brent=None) -> TuningResult:
    """Pilot runs per candidate horizon; pick the smallest median cost.

    Cost is the total number of gradient evaluations, scaled to 1000
    skeleton points.
    """
    from .optimize import BrentConfig
    from .streams import chain_seeds
    from .zigzag import ZigZagConfig, sample_auto

    candidates = [float(c) for c in candidates]
    if not candidates:
        raise ValueError("need at least one candidate t_max")
    seeds = chain_seeds(seed, len(candidates) * replicates)
    rows, summary = [], {}
    for ci, t_max in enumerate(candidates):
        costs = []
        for r in range(replicates):
            cfg = ZigZagConfig(t_max=t_max, K=pilot_K, seed=seeds[ci * replicates + r],
                               brent=brent or BrentConfig())
            skel = sample_auto(target, x0, v0, cfg)
            cost = skel.counters.total * 1000.0 / pilot_K
            costs.append(cost)
            rows.append((t_max, r, cost))
        q1, med, q3 = np.percentile(costs, [25, 50, 75])
        summary[t_max] = (float(q1), float(med), float(q3))
    selected = min(candidates, key=lambda c: (summary[c][1], c))
    return TuningResult(candidates, rows, summary, selected)

"""Automatic Zig-Zag sampling with local rate bounds found by Brent's method."""

from ._backend import BACKEND
from .autodiff import Dual, Potential, directional_derivative, gradient, value_and_gradient
from .diagnostics import (
    BudgetCounters,
    EssReport,
    ess_continuous,
    ess_discrete,
    trajectory_mean,
    trajectory_moments,
    tune_tmax,
)
from .errors import *  # noqa: F401,F403
from .optimize import BoundEstimate, BrentConfig, brent_max, local_bound, parabolic_vertex
from .rates import RateContext, State, choose_dimension, dim_rate, flip, global_rate
from .targets import (
    BENCHMARKS,
    DugongDataset,
    SurvivalDataset,
    TargetSpec,
    benchmark_target,
    make_dugong,
    make_gaussian,
    make_gaussian_mixture,
    make_quartic,
    make_student_t,
    make_weibull_survival,
    simulate_survival,
)
from .zigzag import Skeleton, ZigZagConfig, discretize, interpolate, sample_auto, sample_canonical

__version__ = "0.1.0"

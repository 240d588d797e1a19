"""Zig-Zag samplers: automatic (local Brent bounds) and canonical (global bound).

Random draws come from one Philox stream per chain, in this order: an
exponential increment for every thinning proposal, a uniform for its
acceptance test, and, on acceptance, a uniform for the dimension choice.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from ._backend import kernels
from .diagnostics import BudgetCounters
from .errors import GlobalBoundViolated, QueryOutOfRange
from .optimize import BrentConfig, local_bound
from .rates import RateContext, State, choose_dimension, flip, global_rate
from .streams import make_rng

__all__ = [
    "SkeletonPoint",
    "Skeleton",
    "HorizonRecord",
    "ZigZagConfig",
    "sample_auto",
    "sample_canonical",
    "interpolate",
    "discretize",
    "write_skeleton_csv",
    "write_skeleton_sidecar",
    "read_skeleton",
    "default_start",
]


@dataclass(frozen=True)
class SkeletonPoint:
    t: float
    x: np.ndarray
    v: np.ndarray


@dataclass
class HorizonRecord:
    """One bound optimisation and the proposals thinned against it."""

    index: int
    start_time: float
    bound: float
    opt_evals: int
    tpp_evals: int = 0
    shortcut: bool = False
    converged: bool = True
    outcome: str = "open"  # switch | jump | stop


@dataclass
class Skeleton:
    """Switch events of a run plus its initial and terminal states.

    ``times``, ``positions`` and ``velocities`` hold accepted switches only;
    the velocity at a switch is the post-flip one. ``final`` is the state
    when the run stopped (a pseudo-point, not a switch).
    """

    times: np.ndarray
    positions: np.ndarray
    velocities: np.ndarray
    initial: State
    final: State
    counters: BudgetCounters = field(default_factory=BudgetCounters)
    violations: int = 0
    audit: list = field(default_factory=list)
    info: dict = field(default_factory=dict)

    @property
    def dimension(self):
        return self.initial.dimension

    @property
    def total_time(self) -> float:
        return self.final.time

    @property
    def n_switches(self) -> int:
        return self.times.shape[0]

    @property
    def points(self):
        return [SkeletonPoint(t, x, v) for t, x, v in zip(self.times, self.positions, self.velocities)]

    def nodes(self):
        """Times, positions and segment velocities including both ends."""
        times = np.concatenate([[self.initial.time], self.times, [self.final.time]])
        X = np.vstack([self.initial.position, self.positions, self.final.position])
        V = np.vstack([self.initial.velocity, self.velocities, self.final.velocity])
        return times, X, V


@dataclass(frozen=True)
class ZigZagConfig:
    """Run settings. The run stops at whichever of ``K`` switches, ``budget``
    gradient evaluations or trajectory time ``max_time`` comes first."""

    t_max: float = 1.0
    K: int | None = None
    budget: int | None = None
    max_time: float | None = None
    seed: object = 0
    brent: BrentConfig = field(default_factory=BrentConfig)
    refresh: object = None

    def __post_init__(self):
        if not self.t_max > 0:
            raise ValueError("t_max must be positive")
        if self.K is None and self.budget is None and self.max_time is None:
            raise ValueError("set at least one of K, budget, max_time")
        if self.K is not None and self.K < 0:
            raise ValueError("K must be nonnegative")


def _potential(target):
    return getattr(target, "potential", target)


def default_start(d: int, x0=None, v0=None):
    """Origin and all-+1 velocity unless given."""
    x = np.zeros(d) if x0 is None else np.array(x0, dtype=float)
    v = np.ones(d) if v0 is None else np.array(v0, dtype=float)
    if x.shape != (d,) or v.shape != (d,):
        raise ValueError(f"start position and velocity must have length {d}")
    return x, v


def _exp_time(rng, rate):
    e = rng.standard_exponential()
    return e / rate if rate > 0.0 else math.inf


def _finish(times, X, V, initial, t_end, x_end, v_end, counters, violations, audit, d):
    return Skeleton(
        np.asarray(times, dtype=float),
        np.asarray(X, dtype=float).reshape(-1, d),
        np.asarray(V, dtype=float).reshape(-1, d),
        initial,
        State(t_end, x_end, v_end),
        counters,
        violations,
        audit,
    )


def sample_auto(target, x0=None, v0=None, cfg: ZigZagConfig | None = None, rng=None) -> Skeleton:
    """Automatic Zig-Zag: thinning against Brent bounds over ``[0, t_max]``.

    A proposal whose rate exceeds the bound is a violation: it is accepted
    outright and counted, and the bound is recomputed after the switch.
    """
    cfg = cfg or ZigZagConfig(K=1000)
    U = _potential(target)
    d = U.dimension
    x_s, v_s = default_start(d, x0, v0)
    initial = State(0.0, x_s, v_s)
    rng = make_rng(cfg.seed) if rng is None else rng
    K = math.inf if cfg.K is None else cfg.K
    budget = math.inf if cfg.budget is None else cfg.budget
    T = math.inf if cfg.max_time is None else cfg.max_time
    t_max = cfg.t_max
    counters = BudgetCounters()
    audit: list = []
    times, X, V = [], [], []
    violations = 0
    t_s = 0.0

    def rebound():
        ctx = RateContext(U, x_s, v_s, cfg.refresh)
        est = local_bound(ctx, t_max, cfg.brent)
        counters.opt_evals += est.evals_used
        rec = HorizonRecord(len(audit), t_s, est.bound, est.evals_used,
                            shortcut=est.shortcut, converged=est.converged)
        audit.append(rec)
        return ctx, est.bound, rec

    if K == 0 or budget <= 0 or T <= 0:
        return _finish(times, X, V, initial, 0.0, x_s, v_s, counters, 0, audit, d)

    ctx, bound, rec = rebound()
    tau = _exp_time(rng, bound)
    last = 0.0  # elapsed time of the latest visited point in this horizon
    while True:
        if counters.total >= budget:
            t_end = t_s + last
            break
        if tau > t_max:
            if t_s + t_max >= T:
                t_end = T
                break
            rec.outcome = "jump"
            x_s = x_s + v_s * t_max
            t_s = t_s + t_max
            ctx, bound, rec = rebound()
            tau = _exp_time(rng, bound)
            last = 0.0
            continue
        if t_s + tau >= T:
            t_end = T
            break
        total, per_dim = global_rate(ctx, tau)
        counters.tpp_evals += 1
        rec.tpp_evals += 1
        last = tau
        u = rng.random()
        if total > bound:
            violations += 1
            accept = True
        else:
            accept = u * bound < total
        if accept:
            m = choose_dimension(per_dim, rng.random())
            x_s = x_s + v_s * tau
            t_s = t_s + tau
            v_s = flip(v_s, m)
            times.append(t_s)
            X.append(x_s)
            V.append(v_s)
            rec.outcome = "switch"
            if len(times) >= K:
                t_end = t_s
                last = 0.0
                break
            ctx, bound, rec = rebound()
            tau = _exp_time(rng, bound)
            last = 0.0
        else:
            tau = tau + _exp_time(rng, bound)
    if rec.outcome == "open":
        rec.outcome = "stop"
    x_end = x_s + v_s * (t_end - t_s)
    return _finish(times, X, V, initial, t_end, x_end, v_s, counters, violations, audit, d)


def sample_canonical(target, x0=None, v0=None, global_bound: float = 1.0, K: int = 1000,
                     seed=0, rng=None, refresh=None) -> Skeleton:
    """Canonical Zig-Zag with a caller-guaranteed global rate bound.

    Raises
    ------
    GlobalBoundViolated
        When a proposal's rate exceeds ``global_bound``.
    """
    U = _potential(target)
    d = U.dimension
    x, v = default_start(d, x0, v0)
    initial = State(0.0, x, v)
    rng = make_rng(seed) if rng is None else rng
    if not global_bound > 0:
        raise ValueError("global_bound must be positive")
    counters = BudgetCounters()
    times, X, V = [], [], []
    t = 0.0
    while len(times) < K:
        tau = _exp_time(rng, global_bound)
        ctx = RateContext(U, x, v, refresh)
        total, per_dim = global_rate(ctx, tau)
        counters.tpp_evals += 1
        u = rng.random()
        if total > global_bound:
            raise GlobalBoundViolated(total, global_bound, t + tau)
        t = t + tau
        x = x + v * tau
        if u * global_bound < total:
            m = choose_dimension(per_dim, rng.random())
            v = flip(v, m)
            times.append(t)
            X.append(x)
            V.append(v)
    return _finish(times, X, V, initial, t, x, v, counters, 0, [], d)


def interpolate(skel: Skeleton, t: float) -> np.ndarray:
    """Position at time ``t`` by linear motion from the preceding node."""
    if not (0.0 <= t <= skel.total_time):
        raise QueryOutOfRange(f"t={t} outside [0, {skel.total_time}]")
    times, X, V = skel.nodes()
    return kernels.positions_at(times, X, V, np.array([t], dtype=float))[0]


def discretize(skel: Skeleton, n: int) -> np.ndarray:
    """Positions at ``n`` equally spaced times spanning ``[0, total_time]``."""
    if n < 2:
        raise ValueError("n must be >= 2")
    times, X, V = skel.nodes()
    grid = np.linspace(0.0, skel.total_time, n)
    return kernels.positions_at(times, X, V, grid)


# file formats ----------------------------------------------------------

def _fmt(x) -> str:
    return format(float(x), ".17g")


def write_skeleton_csv(skel: Skeleton, path) -> None:
    """One row per switch, then the terminal pseudo-point."""
    d = skel.dimension
    header = ["t"] + [f"x{i + 1}" for i in range(d)] + [f"v{i + 1}" for i in range(d)]
    with open(path, "w", newline="") as fh:
        fh.write(",".join(header) + "\n")
        rows = list(zip(skel.times, skel.positions, skel.velocities))
        rows.append((skel.final.time, skel.final.position, skel.final.velocity))
        for t, x, v in rows:
            fh.write(",".join([_fmt(t)] + [_fmt(a) for a in x] + [str(int(b)) for b in v]) + "\n")


def skeleton_metadata(skel: Skeleton) -> dict:
    return {
        "dimension": skel.dimension,
        "n_switches": skel.n_switches,
        "terminal_row": True,
        "initial": {
            "t": skel.initial.time,
            "x": skel.initial.position.tolist(),
            "v": [int(a) for a in skel.initial.velocity],
        },
        "total_time": skel.total_time,
        "counters": skel.counters.as_dict(),
        "bound_violations": skel.violations,
        "horizons": len(skel.audit),
    }


def write_skeleton_sidecar(skel: Skeleton, path, config: dict | None = None, seed=None) -> None:
    meta = {"config": config or {}, "seed": seed, **skeleton_metadata(skel)}
    with open(path, "w") as fh:
        json.dump(meta, fh, indent=2, sort_keys=True)
        fh.write("\n")


def read_skeleton(csv_path, sidecar_path) -> Skeleton:
    """Rebuild a skeleton from its CSV and JSON sidecar."""
    with open(sidecar_path) as fh:
        meta = json.load(fh)
    d = int(meta["dimension"])
    arr = np.loadtxt(csv_path, delimiter=",", skiprows=1, ndmin=2)
    init = meta["initial"]
    initial = State(float(init["t"]), init["x"], init["v"])
    c = meta["counters"]
    counters = BudgetCounters(c["opt_evals"], c["tpp_evals"], c.get("unit", "gradient"))
    body, last = arr[:-1], arr[-1]
    return Skeleton(body[:, 0], body[:, 1:1 + d], body[:, 1 + d:1 + 2 * d], initial,
                    State(float(last[0]), last[1:1 + d], last[1 + d:1 + 2 * d]),
                    counters, int(meta.get("bound_violations", 0)))

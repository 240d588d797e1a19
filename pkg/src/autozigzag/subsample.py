"""Zig-Zag with subsampled switching rates and extreme-value rate bounds.

The potential is a sum over ``J`` observations, ``U = sum_j u_j + prior``.
Each observation gives an unbiased estimate of the gradient,
``E^j = J grad u_j + grad prior``, and a subsample ``S`` of size ``h``
averages them. Bounds on the subsample rates are not available in closed
form, so they are estimated: the rates of ``q`` random subsamples are
maximised over the horizon, a generalised Pareto tail is fitted to those
maxima and its ``1 - 1/J`` return level, inflated by ``r``, is used as the
bound. The sampler is exact only when these estimates really bound the rates;
every rate seen above its bound is counted as a violation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy import optimize as sopt

from . import autodiff as ad
from ._backend import kernels
from .diagnostics import BudgetCounters
from .errors import NonFiniteGradient
from .optimize import BrentConfig
from .rates import State, flip
from .streams import make_rng
from .targets import SurvivalDataset, TargetSpec, survival_log_terms
from .zigzag import Skeleton, _finish, default_start

__all__ = [
    "FactoredPotential",
    "GpdFit",
    "SubsampleConfig",
    "BoundSet",
    "gaussian_location_model",
    "survival_model",
    "term_gradients",
    "subsample_gradient",
    "sub_rate",
    "fit_gpd",
    "gpd_return_level",
    "gpd_bound",
    "estimate_bounds",
    "sample_subsampled",
    "write_bound_audit",
]

XI_RANGE = (-0.5, 1.0)
MIN_EXCEEDANCES = 10
DEGENERATE_INFLATION = 1.0 + 1e-6
FALLBACK_INFLATION = 1.5


@dataclass(frozen=True)
class FactoredPotential:
    """Potential written as a sum of ``J`` per-observation terms.

    ``term(idx, x)`` returns the array of terms ``u_j(x)`` for the indices
    ``idx``; it must accept a :class:`~autozigzag.autodiff.Dual` ``x`` so
    that one AD pass yields every per-observation gradient. ``prior(x)`` is
    an optional extra scalar term.
    """

    J: int
    dimension: int
    term: Callable
    prior: Callable | None = None
    name: str = "factored"

    def __post_init__(self):
        if self.J < 1:
            raise ValueError("J must be >= 1")

    def full(self, x):
        out = ad.sum(self.term(np.arange(self.J), x))
        return out + self.prior(x) if self.prior is not None else out

    @property
    def potential(self) -> ad.Potential:
        return ad.Potential(self.dimension, self.full)

    def target(self) -> TargetSpec:
        return TargetSpec(self.name, self.dimension, self.potential, params={"J": self.J})


def gaussian_location_model(y, name: str = "gaussian_location") -> FactoredPotential:
    """``u_j(x) = |x - y_j|^2 / 2`` with a flat prior; ``y`` is ``J x d``."""
    y = np.asarray(y, dtype=float)
    if y.ndim == 1:
        y = y[:, None]
    J, d = y.shape

    def term(idx, x):
        r = x - y[idx] if d > 1 else (x[0] - y[idx, 0])
        if d == 1:
            return 0.5 * r * r
        return 0.5 * ad.sum(r * r, axis=1)

    return FactoredPotential(J, d, term, None, name)


def survival_model(data: SurvivalDataset, name: str = "survival") -> FactoredPotential:
    """Weibull regression likelihood split into one term per subject."""
    times, events, cov = data.times, data.events.astype(float), data.covariates

    def term(idx, x):
        return survival_log_terms(x, times[idx], events[idx], cov[idx])

    return FactoredPotential(len(data), cov.shape[1] + 2, term, None, name)


def term_gradients(fp: FactoredPotential, idx, x) -> np.ndarray:
    """``E^j(x)`` for each ``j`` in ``idx`` as a ``len(idx) x d`` array."""
    idx = np.asarray(idx)
    x = np.asarray(x, dtype=float)
    out = fp.term(idx, ad.Dual.seed(x))
    g = np.broadcast_to(out.tangent, (idx.shape[0], fp.dimension)) * float(fp.J)
    if fp.prior is not None:
        g = g + ad.gradient(ad.Potential(fp.dimension, fp.prior), x)
    if not np.isfinite(g).all():
        raise NonFiniteGradient(x, math.nan, g)
    return g


def subsample_gradient(fp: FactoredPotential, S, x) -> np.ndarray:
    """Average of ``E^j(x)`` over the index set ``S``."""
    return term_gradients(fp, S, x).mean(axis=0)


def sub_rate(fp: FactoredPotential, S, x, v, i: int, t: float) -> float:
    """``max(v_i E^S_i(x + v t), 0)`` for dimension ``i`` (0-based)."""
    x = np.asarray(x, dtype=float)
    v = np.asarray(v, dtype=float)
    g = subsample_gradient(fp, S, x + v * t)
    return max(float(v[i] * g[i]), 0.0)


# generalised Pareto tail -------------------------------------------------

@dataclass(frozen=True)
class GpdFit:
    xi: float
    sigma: float
    threshold: float
    n_exceedances: int
    zeta: float
    flag: str = "ok"  # ok | degenerate | fallback


def _profile(theta, y):
    # Maximised log-likelihood for fixed theta = xi / sigma.
    if theta == 0.0:
        s = y.mean()
        return -y.size * (math.log(s) + 1.0), 0.0, s
    xi = float(np.mean(np.log1p(theta * y)))
    if xi == 0.0:
        s = y.mean()
        return -y.size * (math.log(s) + 1.0), 0.0, s
    sigma = xi / theta
    if not sigma > 0:
        return -math.inf, xi, sigma
    return -y.size * (math.log(sigma) + xi + 1.0), xi, sigma


def fit_gpd(excesses) -> tuple[float, float]:
    """Maximum-likelihood ``(xi, sigma)`` for positive excesses.

    Profile likelihood over ``theta = xi / sigma`` (for fixed ``theta`` the
    optimal ``xi`` is ``mean(log(1 + theta y))``), with ``xi`` restricted to
    ``(-0.5, 1)``.
    """
    y = np.asarray(excesses, dtype=float)
    if y.size < 2 or not (y > 0).all():
        raise ValueError("need at least two positive excesses")
    ymax = float(y.max())

    def xi_of(theta):
        return float(np.mean(np.log1p(theta * y)))

    # xi(theta) increases in theta; theta > -1/ymax keeps 1 + theta y > 0.
    # Near that edge xi may still be above the lower limit (a single term
    # diverges), in which case the edge itself bounds the search.
    lo = -1.0 / ymax * (1.0 - 1e-9)
    if xi_of(lo) < XI_RANGE[0]:
        lo = sopt.brentq(lambda th: xi_of(th) - XI_RANGE[0], lo, 0.0)
    hi = 1.0 / ymax
    while xi_of(hi) < XI_RANGE[1]:
        hi *= 4.0
    hi = sopt.brentq(lambda th: xi_of(th) - XI_RANGE[1], 0.0, hi)
    res = sopt.minimize_scalar(lambda th: -_profile(th, y)[0], bounds=(lo, hi),
                               method="bounded", options={"xatol": 1e-10 * (hi - lo)})
    candidates = [float(res.x), 0.0]
    best = max(candidates, key=lambda th: _profile(th, y)[0])
    _, xi, sigma = _profile(best, y)
    return float(xi), float(sigma)


def gpd_return_level(xi: float, sigma: float, threshold: float, zeta: float, J: int) -> float:
    """Level exceeded with probability ``1/J`` under the fitted tail.

    ``Q = u + (sigma/xi) (((1 - p)/zeta)^(-xi) - 1)`` with ``p = 1 - 1/J``,
    and ``u + sigma log(zeta / (1 - p))`` in the ``xi -> 0`` limit.
    """
    m = zeta * J  # = zeta / (1 - p)
    if abs(xi) < 1e-12:
        return threshold + sigma * math.log(m)
    return threshold + sigma / xi * (m ** xi - 1.0)


def gpd_bound(maxima, J: int, r: float = 2.0, threshold=None) -> tuple[float, GpdFit]:
    """Bound ``r * Q(1 - 1/J)`` from a sample of rate maxima.

    The threshold defaults to the sample median. The bound is never below
    ``r`` times the largest observed maximum. All-equal maxima give
    ``r c (1 + 1e-6)``; fewer than 10 exceedances or a failed fit give
    ``1.5 r max``. Both are flagged in the returned fit.
    """
    m = np.asarray(maxima, dtype=float)
    top = float(m.max())
    if float(m.min()) == top:
        return r * top * DEGENERATE_INFLATION, GpdFit(math.nan, math.nan, top, 0, 0.0, "degenerate")
    u = float(np.median(m)) if threshold is None else float(threshold)
    y = m[m > u] - u
    zeta = y.size / m.size
    if y.size < MIN_EXCEEDANCES:
        return r * top * FALLBACK_INFLATION, GpdFit(math.nan, math.nan, u, y.size, zeta, "fallback")
    try:
        xi, sigma = fit_gpd(y)
    except (ValueError, RuntimeError, FloatingPointError):
        return r * top * FALLBACK_INFLATION, GpdFit(math.nan, math.nan, u, y.size, zeta, "fallback")
    q = gpd_return_level(xi, sigma, u, zeta, J)
    if not math.isfinite(q):
        return r * top * FALLBACK_INFLATION, GpdFit(xi, sigma, u, y.size, zeta, "fallback")
    return r * max(q, top), GpdFit(xi, sigma, u, y.size, zeta)


# bound estimation ---------------------------------------------------------

@dataclass(frozen=True)
class SubsampleConfig:
    """Subsample size ``h``, ``q`` sets for bound estimation, robustness
    factor ``r``. Stops at ``K`` switches, a ``budget`` of term evaluations
    or trajectory time ``max_time``."""

    h: int = 20
    q: int = 1000
    r: float = 2.0
    t_max: float = 1.0
    K: int | None = None
    budget: int | None = None
    max_time: float | None = None
    seed: object = 0
    brent: BrentConfig = field(default_factory=BrentConfig)

    def __post_init__(self):
        if self.h < 1:
            raise ValueError("h must be >= 1")
        if self.q < 30:
            raise ValueError("q must be >= 30")
        if self.r < 1:
            raise ValueError("r must be >= 1")
        if not self.t_max > 0:
            raise ValueError("t_max must be positive")
        if self.K is None and self.budget is None and self.max_time is None:
            raise ValueError("set at least one of K, budget, max_time")

    def check(self, J: int):
        if self.h > J:
            raise ValueError(f"h={self.h} exceeds J={J}")


@dataclass
class BoundSet:
    bounds: np.ndarray
    fits: list
    terms: int
    maxima: np.ndarray


class _SetRates:
    """Memoised sub-rates of a batch of index sets along one ray."""

    def __init__(self, fp, sets, x, v):
        self.fp = fp
        self.sets = sets
        self.x = x
        self.v = v
        self.cache = [dict() for _ in range(sets.shape[0])]
        self.terms = 0

    def fill(self, t, rows):
        """Evaluate the rows' rates at a common time with one AD pass."""
        rows = np.asarray([k for k in rows if t not in self.cache[k]], dtype=np.intp)
        if rows.size == 0:
            return
        idx = self.sets[rows]
        uniq, inv = np.unique(idx, return_inverse=True)
        g = term_gradients(self.fp, uniq, self.x + self.v * t)
        self.terms += uniq.size
        E = g[inv.reshape(idx.shape)].mean(axis=1)
        rates = np.maximum(self.v * E, 0.0)
        for k, rk in zip(rows, rates):
            self.cache[k][t] = rk

    def rate(self, k, t):
        c = self.cache[k]
        if t not in c:
            g = term_gradients(self.fp, self.sets[k], self.x + self.v * t)
            self.terms += self.sets.shape[1]
            c[t] = np.maximum(self.v * g.mean(axis=0), 0.0)
        return c[t]


def _draw_sets(rng, J, h, q):
    if h == J:
        return np.arange(J)[None, :]
    return np.stack([rng.choice(J, size=h, replace=False) for _ in range(q)])


def estimate_bounds(fp: FactoredPotential, x, v, cfg: SubsampleConfig, rng) -> BoundSet:
    """Per-dimension bounds on the subsample rates over ``[0, t_max]``.

    Draws ``q`` index sets, maximises each set's rates with the modified
    Brent search and converts the maxima into GPD return-level bounds.
    The searches share their first probes (the golden-section point, the
    following point, and the end checks) so these are evaluated for all sets
    in one vectorised pass; only sets whose rates are not monotone need
    further, per-set evaluations.

    With ``h = J`` there is a single possible set; it is used once and the
    bound takes the degenerate path.
    """
    x = np.asarray(x, dtype=float)
    v = np.asarray(v, dtype=float)
    d = fp.dimension
    sets = _draw_sets(rng, fp.J, cfg.h, cfg.q)
    n = sets.shape[0]
    T = cfg.t_max
    tol, eps = cfg.brent.resolve(T)
    ev = _SetRates(fp, sets, x, v)
    all_rows = range(n)
    # mirror the first iterations of the search so the cache is hit exactly
    t1 = 0.0 + kernels.GOLDEN * (T - 0.0)
    t2 = t1 + kernels.GOLDEN * (T - t1)
    ev.fill(t1, all_rows)
    ev.fill(t2, all_rows)
    f1 = np.array([ev.cache[k][t1] for k in all_rows])
    f2 = np.array([ev.cache[k][t2] for k in all_rows])
    up = f2 >= f1
    rows_hi = np.flatnonzero(up.any(axis=1))
    rows_lo = np.flatnonzero((~up).any(axis=1))
    if cfg.brent.shortcut:
        for t in (T, T - eps):
            ev.fill(t, rows_hi)
        for t in (0.0, 0.0 + eps):
            ev.fill(t, rows_lo)
    maxima = np.empty((n, d))
    for k in range(n):
        for i in range(d):
            _, fmax, _, _, _ = kernels.modified_brent_max(
                lambda t, k=k, i=i: float(ev.rate(k, t)[i]), 0.0, T, tol,
                int(cfg.brent.max_iters), eps, bool(cfg.brent.shortcut))
            maxima[k, i] = fmax
    bounds = np.empty(d)
    fits = []
    for i in range(d):
        bounds[i], fit = gpd_bound(maxima[:, i], fp.J, cfg.r)
        fits.append(fit)
    return BoundSet(bounds, fits, ev.terms, maxima)


# sampler ---------------------------------------------------------------

def sample_subsampled(fp: FactoredPotential, x0=None, v0=None,
                      cfg: SubsampleConfig | None = None, rng=None) -> Skeleton:
    """Subsampled Zig-Zag with estimated constant bounds per horizon.

    Per horizon the bounds ``c_i`` are estimated; ``d`` homogeneous Poisson
    processes with these rates propose the next event and the dimension
    ``i0``; a fresh index set decides acceptance with probability
    ``sub_rate / c_i0``. Bounds are re-estimated after every switch and
    every deterministic jump. A rate above its bound is a violation: the
    flip is accepted and a new bound estimated from the new state.

    The skeleton's counters are in per-observation term evaluations;
    ``skel.info`` holds the number of acceptance tests and the bound audit
    rows.
    """
    cfg = cfg or SubsampleConfig(K=1000)
    cfg.check(fp.J)
    d = fp.dimension
    x_s, v_s = default_start(d, x0, v0)
    initial = State(0.0, x_s, v_s)
    rng = make_rng(cfg.seed) if rng is None else rng
    K = math.inf if cfg.K is None else cfg.K
    budget = math.inf if cfg.budget is None else cfg.budget
    T = math.inf if cfg.max_time is None else cfg.max_time
    counters = BudgetCounters(unit="term")
    times, X, V, audit = [], [], [], []
    violations = 0
    tests = 0
    horizon = 0
    t_s = 0.0

    def rebound():
        bs = estimate_bounds(fp, x_s, v_s, cfg, rng)
        counters.opt_evals += bs.terms
        for i, fit in enumerate(bs.fits):
            audit.append({"horizon": horizon, "start_time": t_s, "dimension": i + 1,
                          "c_hat": float(bs.bounds[i]), "xi": fit.xi, "sigma": fit.sigma,
                          "threshold": fit.threshold, "n_exceedances": fit.n_exceedances,
                          "flag": fit.flag, "violations": 0})
        return bs.bounds

    if K == 0 or budget <= 0 or T <= 0:
        skel = _finish(times, X, V, initial, 0.0, x_s, v_s, counters, 0, audit, d)
        skel.info = {"tests": 0}
        return skel

    c = rebound()
    tau_opt = 0.0
    last = 0.0
    while True:
        if counters.total >= budget:
            t_end = t_s + last
            break
        with np.errstate(divide="ignore"):
            cand = rng.standard_exponential(d) / c
        i0 = int(np.argmin(cand))
        tau = tau_opt + float(cand[i0])
        if tau > cfg.t_max:
            if t_s + cfg.t_max >= T:
                t_end = T
                break
            x_s = x_s + v_s * cfg.t_max
            t_s += cfg.t_max
            horizon += 1
            c = rebound()
            tau_opt = 0.0
            last = 0.0
            continue
        if t_s + tau >= T:
            t_end = T
            break
        S = rng.choice(fp.J, size=cfg.h, replace=False) if cfg.h < fp.J else np.arange(fp.J)
        g = subsample_gradient(fp, S, x_s + v_s * tau)
        counters.tpp_evals += cfg.h
        tests += 1
        m = max(float(v_s[i0] * g[i0]), 0.0)
        u = rng.random()
        last = tau
        if m > c[i0]:
            violations += 1
            audit[-d + i0]["violations"] += 1
            accept = True
        else:
            accept = u * c[i0] < m
        if not accept:
            tau_opt = tau
            continue
        x_s = x_s + v_s * tau
        t_s += tau
        v_s = flip(v_s, i0)
        times.append(t_s)
        X.append(x_s)
        V.append(v_s)
        if len(times) >= K:
            t_end = t_s
            last = 0.0
            break
        horizon += 1
        c = rebound()
        tau_opt = 0.0
        last = 0.0
    x_end = x_s + v_s * (t_end - t_s)
    skel = _finish(times, X, V, initial, t_end, x_end, v_s, counters, violations, audit, d)
    skel.info = {"tests": tests, "horizons": horizon + 1}
    return skel


AUDIT_FIELDS = ["horizon", "start_time", "dimension", "c_hat", "xi", "sigma", "threshold",
                "n_exceedances", "flag", "violations"]


def write_bound_audit(rows, path) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(",".join(AUDIT_FIELDS) + "\n")
        for row in rows:
            fh.write(",".join(
                format(row[k], ".17g") if isinstance(row[k], float) else str(row[k])
                for k in AUDIT_FIELDS) + "\n")

"""Hamiltonian Monte Carlo baseline with an identity mass matrix."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .autodiff import value_and_gradient
from .diagnostics import ess_discrete
from .errors import NonFiniteGradient
from .streams import chain_seeds, make_rng

__all__ = [
    "HmcConfig",
    "HmcResult",
    "leapfrog",
    "hamiltonian",
    "sample_hmc",
    "iterations_for_budget",
    "tune_hmc",
    "STEP_GRID",
    "L_GRID",
    "write_chain_csv",
]

STEP_GRID = (0.01, 0.02, 0.05, 0.1, 0.2, 0.5, 1.0)
L_GRID = (5, 10, 20, 50)


@dataclass(frozen=True)
class HmcConfig:
    L: int = 10
    step: float = 0.1
    K: int = 1000
    seed: object = 0

    def __post_init__(self):
        if self.L < 1:
            raise ValueError("L must be >= 1")
        if not self.step > 0:
            raise ValueError("step must be positive")
        if self.K < 0:
            raise ValueError("K must be nonnegative")


@dataclass
class HmcResult:
    chain: np.ndarray
    accepted: np.ndarray
    grad_evals: int

    @property
    def accept_rate(self) -> float:
        return float(self.accepted.mean()) if self.accepted.size else math.nan


def _potential(target):
    return getattr(target, "potential", target)


def iterations_for_budget(budget: int, L: int) -> int:
    """Iterations affordable with ``budget`` gradient evaluations."""
    return int(budget) // (L + 1)


def hamiltonian(U, p) -> float:
    return U + 0.5 * float(p @ p)


def leapfrog(target, x, p, L: int, step: float):
    """``L`` leapfrog steps with half momentum steps at both ends.

    Returns ``(x', p', grad_evals, U(x'))`` with ``grad_evals = L + 1``. The
    potential at the start is evaluated as part of the first gradient.
    """
    U = _potential(target)
    x = np.array(x, dtype=float)
    p = np.array(p, dtype=float)
    _, g = value_and_gradient(U, x)
    p = p - 0.5 * step * g
    for k in range(L):
        x = x + step * p
        u_new, g = value_and_gradient(U, x)
        if k < L - 1:
            p = p - step * g
    p = p - 0.5 * step * g
    return x, p, L + 1, u_new


def sample_hmc(target, x0=None, cfg: HmcConfig | None = None, rng=None) -> HmcResult:
    """Metropolis-adjusted HMC; exactly ``(L + 1) K`` gradient evaluations.

    A trajectory that runs into a non-finite gradient is rejected (the
    evaluations it spent still count).
    """
    cfg = cfg or HmcConfig()
    U = _potential(target)
    d = U.dimension
    x = np.zeros(d) if x0 is None else np.array(x0, dtype=float)
    rng = make_rng(cfg.seed) if rng is None else rng
    # U(x) comes for free from the AD pass at the end of each trajectory;
    # the starting value is a plain evaluation without a gradient.
    u_x = float(U(x))
    chain = np.empty((cfg.K, d))
    accepted = np.zeros(cfg.K, dtype=bool)
    evals = 0
    for k in range(cfg.K):
        p = rng.standard_normal(d)
        u = rng.random()
        try:
            # a diverging trajectory overflows the momentum; it is rejected below
            with np.errstate(over="ignore", invalid="ignore"):
                x_new, p_new, n, u_new = leapfrog(U, x, p, cfg.L, cfg.step)
                log_ratio = hamiltonian(u_x, p) - hamiltonian(u_new, p_new)
        except (NonFiniteGradient, FloatingPointError):
            n = cfg.L + 1
            log_ratio = -math.inf
        if math.isnan(log_ratio):
            log_ratio = -math.inf
        evals += n
        if u < math.exp(min(log_ratio, 0.0)):
            x, u_x = x_new, u_new
            accepted[k] = True
        chain[k] = x
    return HmcResult(chain, accepted, evals)


@dataclass
class HmcTuning:
    L: int
    step: float
    rows: list  # (L, step, min ESS per gradient, accept rate)


def tune_hmc(target, budget: int, x0=None, seed=0, steps=STEP_GRID, Ls=L_GRID,
             pilots: int = 1) -> HmcTuning:
    """Grid search for the ``(L, step)`` pair with the largest minimum ESS.

    Each grid point gets ``pilots`` chains of ``budget`` gradient evaluations;
    the score is the median minimum-dimension batch-means ESS.
    """
    grid = list(itertools.product(Ls, steps))
    seeds = chain_seeds(seed, len(grid) * pilots)
    rows = []
    best = None
    for gi, (L, step) in enumerate(grid):
        K = iterations_for_budget(budget, L)
        if K < 20:
            rows.append((L, step, 0.0, math.nan))
            continue
        scores, accs = [], []
        for r in range(pilots):
            res = sample_hmc(target, x0, HmcConfig(L, step, K, seeds[gi * pilots + r]))
            scores.append(ess_discrete(res.chain).minimum if res.accepted.any() else 0.0)
            accs.append(res.accept_rate)
        score = float(np.median(scores))
        rows.append((L, step, score, float(np.mean(accs))))
        if best is None or score > best[2]:
            best = (L, step, score)
    if best is None:
        raise ValueError("budget too small for any grid point")
    return HmcTuning(best[0], best[1], rows)


def write_chain_csv(res: HmcResult, path) -> None:
    d = res.chain.shape[1]
    with open(path, "w", newline="") as fh:
        fh.write(",".join(["iter"] + [f"x{i + 1}" for i in range(d)] + ["accepted"]) + "\n")
        for k, (row, a) in enumerate(zip(res.chain, res.accepted)):
            fh.write(",".join([str(k + 1)] + [format(float(v), ".17g") for v in row]
                              + [str(int(a))]) + "\n")

"""Budgeted sampler comparison and tail-start robustness runs."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize as sopt

from .autodiff import value_and_gradient
from .diagnostics import ess_continuous, ess_discrete
from .hmc import HmcConfig, iterations_for_budget, sample_hmc
from .optimize import BrentConfig
from .streams import chain_seeds
from .zigzag import ZigZagConfig, sample_auto

__all__ = [
    "ComparisonResult",
    "compare_samplers",
    "RobustnessRun",
    "robustness",
    "tail_starts",
    "find_mode",
]


def find_mode(target, x0=None) -> np.ndarray:
    """Minimiser of the potential by BFGS with AD gradients."""
    U = getattr(target, "potential", target)
    x0 = np.zeros(U.dimension) if x0 is None else np.asarray(x0, dtype=float)
    res = sopt.minimize(lambda x: value_and_gradient(U, x), x0, jac=True, method="BFGS",
                        options={"gtol": 1e-9, "maxiter": 10_000})
    return res.x


@dataclass
class ComparisonResult:
    budget: int
    zz_min_ess: np.ndarray
    hmc_min_ess: np.ndarray
    zz_evals: np.ndarray
    hmc_evals: np.ndarray
    flags: list = field(default_factory=list)

    @property
    def zz_median(self) -> float:
        return float(np.median(self.zz_min_ess)) if self.zz_min_ess.size else math.nan

    @property
    def hmc_median(self) -> float:
        return float(np.median(self.hmc_min_ess)) if self.hmc_min_ess.size else math.nan

    def as_dict(self):
        return {
            "budget": self.budget,
            "zz": {"median_min_ess": self.zz_median,
                   "min_ess": [float(e) for e in self.zz_min_ess],
                   "grad_evals": [int(e) for e in self.zz_evals]},
            "hmc": {"median_min_ess": self.hmc_median,
                    "min_ess": [float(e) for e in self.hmc_min_ess],
                    "grad_evals": [int(e) for e in self.hmc_evals]},
            "flags": list(self.flags),
        }


def compare_samplers(target, budget: int, chains: int, seed, t_max: float, L: int,
                     step: float, x0=None, ess_grid: int = 100_000,
                     brent: BrentConfig | None = None) -> ComparisonResult:
    """Median minimum ESS of Zig-Zag and HMC under the same gradient budget.

    Zig-Zag ESS comes from the discretised trajectory, HMC ESS from batch
    means on the chain; both drop the first 10% as burn-in.
    """
    flags = []
    K_hmc = iterations_for_budget(budget, L)
    if K_hmc < 1:
        flags.append("insufficient-budget-hmc")
    seeds = chain_seeds(seed, 2 * chains)
    zz, zz_ev, hm, hm_ev = [], [], [], []
    for c in range(chains):
        skel = sample_auto(target, x0, None, ZigZagConfig(
            t_max=t_max, budget=budget, seed=seeds[c], brent=brent or BrentConfig()))
        zz_ev.append(skel.counters.total)
        if skel.n_switches < 2 or skel.total_time <= 0:
            if "insufficient-budget-zz" not in flags:
                flags.append("insufficient-budget-zz")
            zz.append(math.nan)
        else:
            zz.append(ess_continuous(skel, ess_grid).minimum)
        if K_hmc >= 1:
            res = sample_hmc(target, x0, HmcConfig(L, step, K_hmc, seeds[chains + c]))
            hm_ev.append(res.grad_evals)
            hm.append(ess_discrete(res.chain).minimum if K_hmc >= 10 else math.nan)
    return ComparisonResult(budget, np.array(zz), np.array(hm), np.array(zz_ev, dtype=int),
                            np.array(hm_ev, dtype=int), flags)


def tail_starts(radius: float = 5.0, n: int = 9, offset: float = math.pi / 8) -> np.ndarray:
    """``n`` two-dimensional starting points evenly spread on a circle."""
    ang = offset + 2.0 * math.pi * np.arange(n) / n
    return radius * np.column_stack([np.cos(ang), np.sin(ang)])


@dataclass
class RobustnessRun:
    sampler: str
    start: np.ndarray
    final: np.ndarray
    path: np.ndarray  # skeleton positions or chain rows, start included

    @property
    def moved(self) -> float:
        return float(np.max(np.abs(self.path - self.start)))

    @property
    def final_radius(self) -> float:
        return float(np.linalg.norm(self.final))


def robustness(target, starts, seed, t_max: float, L: int, step: float,
               K_zz: int = 1000, K_hmc: int = 1000) -> list:
    """Fixed-length Zig-Zag and HMC chains from each starting point."""
    starts = np.atleast_2d(np.asarray(starts, dtype=float))
    seeds = chain_seeds(seed, 2 * len(starts))
    runs = []
    for k, x0 in enumerate(starts):
        skel = sample_auto(target, x0, None, ZigZagConfig(t_max=t_max, K=K_zz, seed=seeds[k]))
        path = np.vstack([x0, skel.positions, skel.final.position])
        runs.append(RobustnessRun("zigzag", x0, skel.final.position, path))
        res = sample_hmc(target, x0, HmcConfig(L, step, K_hmc, seeds[len(starts) + k]))
        runs.append(RobustnessRun("hmc", x0, res.chain[-1], np.vstack([x0, res.chain])))
    return runs

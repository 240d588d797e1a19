"""Time the compiled kernels against the pure-Python fallback.

Run with ``python benchmarks/bench_kernels.py [--repeat N]``. Each kernel
is timed on identical inputs under both backends and the outputs are
checked for agreement before timing.
"""

from __future__ import annotations

import argparse
import math
import os
import subprocess
import sys
import timeit

import numpy as np

from autozigzag import _backend


def _inputs(seed=0):
    rng = np.random.default_rng(seed)
    n, d = 20_000, 4
    times = np.cumsum(rng.exponential(0.5, n))
    times[0] = 0.0
    pos = rng.standard_normal((n, d))
    vel = rng.choice([-1.0, 1.0], (n, d))
    grid = np.linspace(0.0, times[-1], 50_000)
    samples = rng.standard_normal((100_000, d))
    rates = rng.exponential(1.0, 50)
    return times, pos, vel, grid, samples, rates


def _cases(k, data):
    times, pos, vel, grid, samples, rates = data

    def f(t):
        return math.sin(3.0 * t) + 0.1 * t

    return {
        "modified_brent_max": lambda: k.modified_brent_max(f, 0.0, 2.0, 1e-6, 100, 1e-6, True),
        "choose_index": lambda: k.choose_index(rates, 0.37),
        "segment_moments": lambda: k.segment_moments(times, pos, vel, 0.0, float(times[-1])),
        "positions_at": lambda: k.positions_at(times, pos, vel, grid),
        "batch_means": lambda: k.batch_means(samples, 316),
    }


def _close(a, b):
    if isinstance(a, tuple):
        return all(_close(x, y) for x, y in zip(a, b))
    return np.allclose(a, b, rtol=1e-10, atol=1e-12)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)
    names = _backend.available()
    if "compiled" not in names:
        print("compiled backend unavailable; only the fallback can be timed")
    data = _inputs()
    mods = {n: _backend.load(n) for n in names}
    cases = {n: _cases(m, data) for n, m in mods.items()}
    print(f"{'kernel':<22}" + "".join(f"{n + ' (ms)':>16}" for n in names) + f"{'speedup':>10}")
    for kern in cases["python"]:
        if len(names) == 2:
            assert _close(cases["compiled"][kern](), cases["python"][kern]()), kern
        row = {}
        for n in names:
            fn = cases[n][kern]
            number = max(1, int(0.2 / max(timeit.timeit(fn, number=1), 1e-6)))
            row[n] = min(timeit.repeat(fn, number=number, repeat=args.repeat)) / number * 1e3
        speed = row["python"] / row["compiled"] if "compiled" in row else float("nan")
        print(f"{kern:<22}" + "".join(f"{row[n]:>16.4f}" for n in names) + f"{speed:>10.1f}")

    # end-to-end: the backend is fixed at import, so each run gets its own interpreter
    code = ("import timeit; from autozigzag import *; t = benchmark_target('IsoG2'); "
            "print(min(timeit.repeat(lambda: sample_auto(t, cfg=ZigZagConfig(t_max=1.0, K=2000, seed=1)),"
            " number=1, repeat=3)))")
    for n in names:
        env = dict(os.environ, AUTOZIGZAG_PURE_PYTHON="1" if n == "python" else "0")
        out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
        print(f"sample_auto IsoG2 K=2000 [{n}]: {float(out.stdout):.3f} s")

if __name__ == "__main__":
    main()

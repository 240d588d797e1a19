from pathlib import Path

import numpy as np
import pytest

from autozigzag import targets as tg

DATA_DIR = Path(__file__).resolve().parents[1] / "data"
DUGONG_CSV = DATA_DIR / "dugong.csv"

# mode of the bundled dugong posterior, used to centre random test points
DUGONG_MODE = np.array([0.9736, -0.0326, 1.8619, -2.3902])
SURVIVAL_TRUTH = np.array([0.2, 6.0, 0.3, 0.5])


def bundled_targets():
    """Every target the package ships, with a point to centre tests on."""
    out = [(tg.benchmark_target(n), np.zeros(2)) for n in tg.BENCHMARKS]
    if DUGONG_CSV.exists():
        out.append((tg.make_dugong(tg.read_dugong_csv(DUGONG_CSV)), DUGONG_MODE))
    data = tg.simulate_survival(500, SURVIVAL_TRUTH, 1000.0, 3)
    out.append((tg.make_weibull_survival(data), SURVIVAL_TRUTH))
    return out


@pytest.fixture(scope="session")
def targets_with_centres():
    return bundled_targets()


def central_difference(fn, x, h=1e-5):
    x = np.asarray(x, dtype=float)
    g = np.empty_like(x)
    for i in range(x.size):
        e = np.zeros_like(x)
        e[i] = h
        g[i] = (float(fn(x + e)) - float(fn(x - e))) / (2 * h)
    return g


# acceptance summary -----------------------------------------------------

ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)

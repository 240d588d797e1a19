import math
import os
import subprocess
import sys

import numpy as np
import pytest

from autozigzag import _backend

needs_compiled = pytest.mark.skipif("compiled" not in _backend.available(),
                                    reason="compiled extension not built")


def test_python_backend_always_available():
    assert "python" in _backend.available()
    with pytest.raises(ValueError):
        _backend.load("fortran")


def test_env_var_forces_fallback():
    code = "import autozigzag; print(autozigzag.BACKEND)"
    env = dict(os.environ, AUTOZIGZAG_PURE_PYTHON="1")
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "python"


@needs_compiled
def test_default_backend_is_compiled():
    assert _backend.BACKEND == "compiled"


@needs_compiled
def test_scalar_kernels_bit_identical():
    py, cy = _backend.load("python"), _backend.load("compiled")
    rng = np.random.default_rng(0)
    for _ in range(200):
        a, b, c = np.sort(rng.uniform(-3, 3, 3))
        fa, fb, fc = rng.normal(size=3)
        assert py.parabolic_vertex(a, fa, b, fb, c, fc) == cy.parabolic_vertex(a, fa, b, fb, c, fc)
    fns = [math.sin, lambda t: -(t - 0.3) ** 2, lambda t: 1 + 0.5 * t, lambda t: abs(t - 0.7),
           lambda t: math.exp(-t) * math.cos(4 * t)]
    for f in fns:
        for shortcut in (True, False):
            args = (f, 0.0, 2.0, 1e-7, 100, 1e-5, shortcut)
            assert py.modified_brent_max(*args) == cy.modified_brent_max(*args)
    for _ in range(200):
        r = rng.exponential(size=5) * (rng.random(5) > 0.3)
        u = rng.random()
        assert py.choose_index(r, u) == cy.choose_index(r, u)


@needs_compiled
def test_array_kernels_agree():
    py, cy = _backend.load("python"), _backend.load("compiled")
    rng = np.random.default_rng(1)
    n, d = 500, 3
    T = np.concatenate([[0.0], np.cumsum(rng.exponential(size=n - 1))])
    X = rng.normal(size=(n, d))
    V = rng.choice([-1.0, 1.0], (n, d))
    for a, b in zip(py.segment_moments(T, X, V, 3.0, T[-1]), cy.segment_moments(T, X, V, 3.0, T[-1])):
        assert np.allclose(a, b, rtol=1e-12)
    grid = np.linspace(0, T[-1], 1000)
    assert np.allclose(py.positions_at(T, X, V, grid), cy.positions_at(T, X, V, grid), rtol=1e-14)
    Y = rng.normal(size=(1000, d))
    for a, b in zip(py.batch_means(Y, 31), cy.batch_means(Y, 31)):
        assert np.allclose(a, b, rtol=1e-12)

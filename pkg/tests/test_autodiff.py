import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from autozigzag import autodiff as ad
from autozigzag.autodiff import Dual, Potential, directional_derivative, gradient, value_and_gradient
from autozigzag.errors import NonFiniteGradient
from autozigzag.targets import benchmark_target, make_quartic

from conftest import bundled_targets, central_difference


def test_gradient_of_half_square():
    p = Potential(1, lambda x: 0.5 * x @ x)
    assert np.allclose(gradient(p, [1.5]), [1.5])


def test_gradient_isotropic_2d():
    p = benchmark_target("IsoG2").potential
    assert np.allclose(gradient(p, [0.5, 1.1]), [0.5, 1.1], atol=1e-15)


def test_gradient_quartic_against_finite_difference():
    p = make_quartic(1).potential
    g = gradient(p, [2.0])
    fd = central_difference(p, [2.0])
    assert g[0] == pytest.approx(8.0, rel=1e-12)
    assert abs(g[0] - fd[0]) / abs(g[0]) < 1e-6


def test_directional_derivative_examples():
    iso = benchmark_target("IsoG2").potential
    assert directional_derivative(iso, [0, 0], [1, 1], 0, 2.0) == pytest.approx(2.0)
    assert directional_derivative(iso, [0.5, 1.1], [1, -1], 1, 0.0) == pytest.approx(1.1)
    q = make_quartic(1).potential
    assert directional_derivative(q, [1.0], [1.0], 0, 1.0) == pytest.approx(8.0)


def test_value_and_gradient_returns_value():
    p = benchmark_target("IsoG2").potential
    u, g = value_and_gradient(p, [0.5, 1.1])
    assert u == pytest.approx(0.73)
    assert g.shape == (2,)


def test_constant_potential_has_zero_gradient():
    p = Potential(3, lambda x: 4.0)
    assert np.array_equal(gradient(p, np.ones(3)), np.zeros(3))


def test_non_finite_gradient_carries_point():
    p = Potential(1, lambda x: ad.log(x[0]))
    with pytest.raises(NonFiniteGradient) as info:
        gradient(p, [0.0])
    assert np.array_equal(info.value.x, [0.0])
    with pytest.raises(NonFiniteGradient):
        gradient(Potential(1, lambda x: ad.sqrt(x[0])), [-1.0])


def test_elementary_functions_match_finite_differences():
    fns = [
        lambda x: ad.exp(x[0]) * ad.log(x[1]),
        lambda x: ad.log1p(x[0] * x[1]) + ad.sqrt(x[1]),
        lambda x: ad.logistic(x[0]) - ad.softplus(x[1]),
        lambda x: ad.log_logistic(x[0] - x[1]) + ad.power(x[1], 2.5),
        lambda x: ad.logsumexp(ad.square(x)) + ad.dot(x, np.array([1.0, -2.0])),
        lambda x: ad.sum(ad.where(np.array([True, False]), x * 3.0, x / 2.0)),
        lambda x: 1.0 / x[0] - 2.0 ** x[1] + x[0] ** 3 - (5.0 - x[1]) / x[0],
    ]
    x = np.array([0.7, 1.3])
    for fn in fns:
        p = Potential(2, fn)
        g = gradient(p, x)
        fd = central_difference(p, x)
        assert np.max(np.abs(g - fd) / (1 + np.abs(g))) < 1e-7


def test_array_valued_intermediates():
    # a sum over many observations differentiates in one pass
    y = np.linspace(-1, 1, 50)
    p = Potential(1, lambda x: ad.sum(0.5 * (x[0] - y) ** 2))
    assert gradient(p, [0.3])[0] == pytest.approx(50 * 0.3 - y.sum())


def test_identity_seed_reproduces_gradient_columns():
    target = benchmark_target("CorG2")
    x = np.array([0.4, -0.8])
    full = gradient(target.potential, x)
    for i in range(2):
        seed = Dual(x, np.eye(2)[:, [i]])
        col = target.potential(seed).tangent
        assert float(np.ravel(col)[0]) == pytest.approx(full[i], abs=1e-14)


def test_bundled_targets_match_finite_differences():
    rng = np.random.default_rng(0)
    for target, centre in bundled_targets():
        scale = 1.0 if target.dimension == 2 else 0.05
        for _ in range(100):
            x = centre + scale * rng.standard_normal(target.dimension)
            g = gradient(target.potential, x)
            fd = central_difference(target.potential, x)
            err = np.max(np.abs(g - fd) / (1 + np.abs(g)))
            assert err < 1e-6, (target.name, x, err)


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(-5, 5), min_size=2, max_size=2), st.floats(-100, 100))
def test_additive_constant_does_not_change_gradient(x, c):
    base = benchmark_target("HT2").potential
    shifted = Potential(2, lambda z: base(z) + c)
    assert np.allclose(gradient(base, x), gradient(shifted, x), rtol=0, atol=1e-12)


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(-10, 10), min_size=3, max_size=3))
def test_gradient_is_deterministic(x):
    p = make_quartic(3).potential
    assert np.array_equal(gradient(p, x), gradient(p, x))

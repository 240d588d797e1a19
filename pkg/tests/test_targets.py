import math

import numpy as np
import pytest
from scipy import optimize as sopt
from scipy import stats

from autozigzag import targets as tg
from autozigzag.autodiff import gradient
from autozigzag.errors import EmptyDataset, InvalidCovariance, InvalidMixture, InvalidSurvivalTime

from conftest import DUGONG_CSV, bundled_targets, central_difference


def U(target, x):
    return float(target.potential(np.asarray(x, dtype=float)))


def test_gaussian_examples():
    assert U(tg.benchmark_target("IsoG2"), [0.5, 1.1]) == pytest.approx(0.73)
    assert U(tg.benchmark_target("CorG2"), [1, 1]) == pytest.approx(10 / 19)
    assert U(tg.benchmark_target("DscG2"), [0, 10]) == pytest.approx(0.5)


def test_gaussian_gradient_is_precision_times_residual():
    rng = np.random.default_rng(1)
    for name in ("IsoG2", "CorG2", "DscG2"):
        t = tg.benchmark_target(name)
        P = np.linalg.inv(t.covariance)
        for _ in range(50):
            x = 3 * rng.standard_normal(2)
            assert np.allclose(gradient(t.potential, x), P @ (x - t.mean), rtol=0, atol=1e-10)


def test_invalid_covariance():
    with pytest.raises(InvalidCovariance):
        tg.make_gaussian([0, 0], [[1, 2], [2, 1]])
    with pytest.raises(InvalidCovariance):
        tg.make_gaussian([0, 0], [[1, 0.5], [0.2, 1]])


def test_mixture_midpoint_gradient_is_zero():
    t = tg.benchmark_target("BimodG2")
    assert np.allclose(gradient(t.potential, [0.0, 0.0]), 0.0, atol=1e-15)


def test_mixture_gradient_at_component_mean():
    t = tg.benchmark_target("BimodG2")
    g = gradient(t.potential, [2.0, 0.0])
    # d/dx1 of -log(N(x; 2) + N(x; -2)) at x1 = 2, worked by hand
    expected = 4 * math.exp(-8) / (1 + math.exp(-8))
    assert g[0] == pytest.approx(expected, rel=1e-10)
    assert g[1] == pytest.approx(0.0, abs=1e-15)
    assert g[0] == pytest.approx(central_difference(t.potential, [2.0, 0.0])[0], rel=1e-5)


def test_mixture_validation():
    with pytest.raises(InvalidMixture):
        tg.make_gaussian_mixture([0.5, 0.6], [[0], [1]], [[[1]], [[1]]])
    with pytest.raises(InvalidMixture):
        tg.make_gaussian_mixture([1.0], [[0], [1]], [[[1]], [[1]]])


def test_student_t():
    t = tg.make_student_t(2.0, 2)
    assert np.allclose(gradient(t.potential, [0, 0]), 0.0)
    # (nu + d)/2 * 2 x / (nu + x^2) = 2 * 2 / 3 at x = (1, 0)
    assert gradient(t.potential, [1.0, 0.0])[0] == pytest.approx(4 / 3)
    assert gradient(t.potential, [1.0, 0.0])[0] == pytest.approx(
        central_difference(t.potential, [1.0, 0.0])[0], rel=1e-8)


def test_quartic_examples():
    t = tg.benchmark_target("LT2")
    assert U(t, [1, 1]) == pytest.approx(0.5)
    assert np.allclose(gradient(t.potential, [2, 0]), [8, 0])
    assert np.allclose(gradient(t.potential, [-1.5, 0.5]), [-3.375, 0.125])


def test_unknown_benchmark():
    with pytest.raises(KeyError):
        tg.benchmark_target("nope")


def _dugong_oracle(x, z, y):
    a, b, g, s = math.exp(x[0]), math.exp(x[1]), 1 / (1 + math.exp(-x[2])), math.exp(x[3])
    ll = stats.norm.logpdf(y, a - b * g ** z, s).sum()
    lp = stats.beta.logpdf(g, 7, 7 / 3)
    log_jac = x[0] + x[1] + math.log(g * (1 - g)) + x[3]
    return -(ll + lp + log_jac)


def test_dugong_against_scipy_oracle():
    data = tg.DugongDataset([1.0, 5.0, 13.0], [1.8, 2.3, 2.5])
    t = tg.make_dugong(data)
    pts = [np.zeros(4), np.array([0.9, -0.1, 1.5, -2.0]), np.array([1.1, 0.2, 2.5, -1.0])]
    ref = _dugong_oracle(pts[0], data.ages, data.lengths)
    for p in pts[1:]:
        # potentials agree up to an additive constant
        got = U(t, p) - U(t, pts[0])
        want = _dugong_oracle(p, data.ages, data.lengths) - ref
        assert got == pytest.approx(want, rel=1e-10)


def test_dugong_csv_roundtrip(tmp_path):
    data = tg.DugongDataset([1.0, 2.0], [1.8, 1.85])
    path = tmp_path / "d.csv"
    tg.write_dugong_csv(data, path)
    back = tg.read_dugong_csv(path)
    assert np.array_equal(back.ages, data.ages) and np.array_equal(back.lengths, data.lengths)


def test_dugong_empty():
    with pytest.raises(EmptyDataset):
        tg.make_dugong(tg.DugongDataset(np.array([]), np.array([])))


@pytest.mark.skipif(not DUGONG_CSV.exists(), reason="dugong data absent")
def test_bundled_dugong_file():
    data = tg.read_dugong_csv(DUGONG_CSV)
    assert len(data) == 27


def _survival_oracle(x, data):
    alpha = math.exp(x[0])
    mu = np.exp(x[1] + data.covariates @ np.asarray(x[2:]))
    d = stats.weibull_min(alpha, scale=mu)
    return -np.where(data.events == 1, d.logpdf(data.times), d.logsf(data.times)).sum()


def test_survival_against_scipy_oracle():
    data = tg.SurvivalDataset([120.0, 1000.0, 35.5, 800.0, 410.0], [1, 0, 1, 0, 1],
                              [[0.3, 1], [-1.2, 0], [1.5, 1], [0.0, 0], [-0.4, 1]])
    t = tg.make_weibull_survival(data)
    for x in ([0.2, 6.0, 0.3, 0.5], [-0.1, 5.0, -0.2, 1.0]):
        assert U(t, x) == pytest.approx(_survival_oracle(x, data), rel=1e-12)


def test_survival_validation():
    with pytest.raises(InvalidSurvivalTime):
        tg.SurvivalDataset([1.0, 0.0], [1, 1], [[0.0], [1.0]])
    with pytest.raises(ValueError):
        tg.SurvivalDataset([1.0, 2.0], [1, 2], [[0.0], [1.0]])
    with pytest.raises(EmptyDataset):
        tg.make_weibull_survival(tg.SurvivalDataset(np.array([]), np.array([]), np.zeros((0, 2))))


def test_simulate_survival_determinism_and_censoring(tmp_path):
    a = tg.simulate_survival(200, [0.2, 6, 0.3, 0.5], 1000.0, 5)
    b = tg.simulate_survival(200, [0.2, 6, 0.3, 0.5], 1000.0, 5)
    assert np.array_equal(a.times, b.times) and np.array_equal(a.events, b.events)
    tiny = tg.simulate_survival(200, [0.2, 6, 0.3, 0.5], 1e-300, 5)
    assert not tiny.events.any()
    path = tmp_path / "s.csv"
    tg.write_survival_csv(a, path)
    c = tg.read_survival_csv(path)
    assert np.array_equal(c.times, a.times) and np.array_equal(c.covariates, a.covariates)


@pytest.mark.slow
def test_simulated_survival_mle_recovers_truth():
    truth = np.array([math.log(1.2), 6.0, 0.3, 0.5])
    data = tg.simulate_survival(100_000, truth, 1000.0, 17)

    def nll(x):
        return _survival_oracle(x, data)

    res = sopt.minimize(nll, truth + 0.1, method="BFGS")
    # standard errors from a finite-difference Hessian of the oracle likelihood
    t = tg.make_weibull_survival(data)
    H = np.column_stack([central_difference(lambda z: gradient(t.potential, z)[i], res.x, 1e-4)
                         for i in range(4)])
    se = np.sqrt(np.diag(np.linalg.inv(0.5 * (H + H.T))))
    assert np.all(np.abs(res.x - truth) < 3 * se), (res.x, se)


def test_targets_finite_on_wide_gaussian_draws():
    rng = np.random.default_rng(2)
    for target, centre in bundled_targets():
        scale = 3.0 if target.dimension == 2 else 0.3
        for _ in range(1000 if target.dimension == 2 else 100):
            x = centre + scale * rng.standard_normal(target.dimension)
            g = gradient(target.potential, x)
            assert np.isfinite(g).all()
            assert U(target, x) == U(target, x)

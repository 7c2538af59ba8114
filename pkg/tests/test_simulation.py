import math

import numpy as np
import pytest

from lcvt import simulation as sim
from lcvt.errors import CampaignAborted, ConfigError
from lcvt.numerics import DataMatrix, RngState
from lcvt.simulation import (CoefficientSpec, CovarianceSpec, ScenarioSpec, augment_with_irrelevant,
                             build_covariance, calibrate_tau, coefficient_vector, generate_dataset,
                             prepare_design, run_augmentation, run_campaign, sigma_function)

COVARIANCES = [("independent", 0.0), ("toeplitz", 0.9), ("equicorr", 0.3), ("equicorr", 0.9)]
TAU_KINDS = ["sparse", "moderately_sparse", "dense"]


def spec(n=60, p=40, cov=("independent", 0.0), coef="sparse", **kw):
    return ScenarioSpec(n=n, p=p, covariance=CovarianceSpec(cov[0], p, cov[1]),
                        coefficients=CoefficientSpec(coef, p), **kw)


def test_covariance_examples():
    assert np.array_equal(build_covariance(CovarianceSpec("independent", 3)), np.eye(3))
    T = build_covariance(CovarianceSpec("toeplitz", 3, 0.9))
    assert np.allclose(T, [[1, .9, .81], [.9, 1, .9], [.81, .9, 1]], atol=1e-15)
    E = build_covariance(CovarianceSpec("equicorr", 2, 0.3))
    assert np.array_equal(E, [[1, .3], [.3, 1]])


def test_covariance_validation():
    with pytest.raises(ConfigError):
        CovarianceSpec("toeplitz", 4, 1.0)
    with pytest.raises(ConfigError):
        CovarianceSpec("equicorr", 4, -0.1)
    with pytest.raises(ConfigError):
        CovarianceSpec("banded", 4)


def test_coefficient_layouts():
    s = coefficient_vector(CoefficientSpec("sparse", 8), tau=2.0)
    assert np.array_equal(s, [1, 2, 2, 2, 2, 0, 0, 0])
    m = coefficient_vector(CoefficientSpec("moderately_sparse", 25), tau=1.0)
    assert m[0] == 1 and np.all(m[1:10] == 5) and np.all(m[10:20] == 1) and np.all(m[20:] == 0)
    d = coefficient_vector(CoefficientSpec("dense", 5), tau=1.0)
    assert np.allclose(d, [1, 1 / math.sqrt(2), 1 / math.sqrt(3), 0.5, 1 / math.sqrt(5)])
    h = coefficient_vector(CoefficientSpec("half_ones", 6))
    assert np.array_equal(h, [1, 1, 1, 0, 0, 0])


def test_tau_independent_sparse():
    tau = calibrate_tau(CovarianceSpec("independent", 200), CoefficientSpec("sparse", 200))
    assert abs(tau - math.sqrt(0.75)) < 1e-12


def test_tau_independent_dense_harmonic():
    p = 200
    H = math.fsum(1.0 / j for j in range(2, p + 1))
    tau = calibrate_tau(CovarianceSpec("independent", p), CoefficientSpec("dense", p))
    assert abs(tau - math.sqrt(3.0 / H)) < 1e-12


@pytest.mark.parametrize("cov", COVARIANCES)
@pytest.mark.parametrize("kind", TAU_KINDS)
@pytest.mark.parametrize("p", [200, 1000])
def test_tau_solves_signal_equation(cov, kind, p):
    c = CovarianceSpec(cov[0], p, cov[1])
    k = CoefficientSpec(kind, p)
    b = coefficient_vector(k, calibrate_tau(c, k))
    assert abs(b @ build_covariance(c) @ b - 4.0) < 1e-10


def test_sigma_forms():
    rng = np.random.default_rng(0)
    X = rng.standard_normal((500, 20))
    beta = coefficient_vector(CoefficientSpec("sparse", 20), tau=0.5)
    assert np.array_equal(sigma_function("homoskedastic", X, beta), np.ones(500))
    assert np.allclose(sigma_function("form1", np.zeros((3, 20)), beta), 1.0)
    s2 = sigma_function("form2", X, beta)
    assert abs(np.mean(s2 ** 2) - 1.0) < 1e-12
    s3 = sigma_function("form3", X, beta)
    expect = (1 + np.sin(10 * X) @ (1 / np.arange(1, 21))) ** 2
    assert np.allclose(s3, expect)
    assert np.allclose(sigma_function("form4", X, beta), np.exp(0.5 * X[:, :2].sum(axis=1)))
    assert np.allclose(sigma_function("form5", X, beta),
                       (1 + 0.5 * np.sin(10 * X[:, :2]).sum(axis=1)) ** 2)
    assert np.allclose(sigma_function("form6", X, beta), (1 + 0.5 * X[:, :2].sum(axis=1)) ** 2)
    for form in sim.FORMS:
        assert (sigma_function(form, X, beta) > 0).all()


def test_sigma_floor():
    X = np.full((2, 10), -2.0)  # form6 uses one column: 1 + 0.5 * (-2) = 0
    s = sigma_function("form6", X, np.zeros(10))
    assert np.all(s == sim.SIGMA_FLOOR)


def test_scenario_validation():
    with pytest.raises(ConfigError):
        spec(p=45, form="form4")
    with pytest.raises(ConfigError):
        spec(reps=0)
    with pytest.raises(ConfigError):
        spec(engine="ridge")


def test_dataset_is_deterministic_and_consistent():
    s = spec(n=50, p=30, cov=("toeplitz", 0.9), form="form1")
    d1, t1 = generate_dataset(s, RngState(3, 7))
    d2, t2 = generate_dataset(s, RngState(3, 7))
    assert np.array_equal(d1.X, d2.X) and np.array_equal(d1.y, d2.y)
    assert np.allclose(d1.y - d1.X @ t1.beta0, t1.errors, atol=1e-12)
    d3, _ = generate_dataset(s, RngState(3, 8))
    assert not np.array_equal(d1.X, d3.X)


def test_homoskedastic_error_variance():
    _, truth = generate_dataset(spec(n=10_000, p=10), RngState(1))
    assert abs(np.var(truth.errors) - 1.0) < 0.05


@pytest.mark.parametrize("cov", COVARIANCES)
@pytest.mark.parametrize("kind", ["sparse", "dense", "half_ones"])
def test_response_variance_matches_population(cov, kind):
    s = spec(n=10_000, p=20, cov=cov, coef=kind)
    design = prepare_design(s)
    data, _ = generate_dataset(s, RngState(2), design)
    target = design.beta0 @ build_covariance(s.covariance) @ design.beta0 + 1.0
    se = target * math.sqrt(2.0 / (s.n - 1))
    assert abs(np.var(data.y, ddof=1) - target) < 3 * se


def test_augment_single_column():
    data = DataMatrix(np.ones((20, 2)), np.arange(20.0))
    aug = augment_with_irrelevant(data, 1, rng=RngState(0))
    assert aug.X.shape == (20, 3)
    assert np.array_equal(aug.X[:, :2], data.X) and np.array_equal(aug.y, data.y)
    assert augment_with_irrelevant(data, 0) is data


def test_augment_block_statistics():
    rng = np.random.default_rng(0)
    y = rng.standard_normal(10_000)
    data = DataMatrix(y[:, None] + rng.standard_normal((10_000, 1)), y)
    W = augment_with_irrelevant(data, 3, 0.9, RngState(5)).X[:, 1:]
    assert np.abs(np.cov(W, rowvar=False) - build_covariance(CovarianceSpec("toeplitz", 3, 0.9))).max() < 0.05
    for j in range(3):
        assert abs(np.corrcoef(W[:, j], y)[0, 1]) < 0.05


def test_single_replication():
    rep = run_campaign(spec(reps=1), workers=1)
    assert rep.rejection_rate in (0.0, 1.0)
    assert rep.binomial_se == 0.0
    assert rep.reps_completed == 1


def test_campaign_independent_of_workers():
    s = spec(n=50, p=80, form="form1", reps=12, base_seed=9)
    a = run_campaign(s, workers=1)
    b = run_campaign(s, workers=3)
    assert a == b
    assert a.kkt_ok
    assert math.isclose(a.binomial_se, math.sqrt(a.rejection_rate * (1 - a.rejection_rate) / 12))


def test_progress_callback():
    seen = []
    run_campaign(spec(reps=4), workers=1, progress=seen.append)
    assert sorted(seen) == [0, 1, 2, 3]


def test_ols_baseline_singular_is_reported():
    rep = run_campaign(spec(n=30, p=40, engine="ols_baseline"))
    assert rep.rejection_rate is None and "SingularDesign" in rep.note
    ok = run_campaign(spec(n=60, p=10, engine="ols_baseline", reps=5), workers=1)
    assert ok.rejection_rate is not None and ok.failures == 0


def test_too_many_failures_abort(monkeypatch):
    calls = iter(range(100))
    monkeypatch.setattr(sim, "_run_test",
                        lambda *a, **k: None if next(calls) % 2 else (False, 2.0, 1, True))
    with pytest.raises(CampaignAborted):
        run_campaign(spec(reps=10), workers=1)


def test_failures_excluded_from_rate(monkeypatch):
    calls = iter(range(100))
    monkeypatch.setattr(sim, "_run_test",
                        lambda *a, **k: None if next(calls) == 0 else (True, 2.0, 1, True))
    rep = run_campaign(spec(reps=10), workers=1)
    assert rep.failures == 1 and rep.reps_completed == 9 and rep.rejection_rate == 1.0


def test_default_workers_env(monkeypatch):
    monkeypatch.setenv("LCVT_WORKERS", "3")
    assert sim.default_workers() == 3
    monkeypatch.setenv("LCVT_WORKERS", "zero")
    with pytest.raises(ConfigError):
        sim.default_workers()
    monkeypatch.delenv("LCVT_WORKERS")
    assert sim.default_workers() >= 1


def test_augmentation_campaign_d0_equals_plain_tests():
    from lcvt.hetero import lcvt_test
    data, _ = generate_dataset(spec(n=60, p=10, form="form1"), RngState(0))
    rep = run_augmentation(data, 0, reps=3, base_seed=4, workers=1)
    rejects = [lcvt_test(data, rng=RngState(4, r)).reject for r in range(3)]
    assert rep.rejection_rate == sum(rejects) / 3


@pytest.mark.slow
@pytest.mark.parametrize("form", ["form1", "form2", "form3"])
def test_power_grows_with_n(form):
    reports = {n: run_campaign(spec(n=n, p=2 * n, form=form, reps=200, base_seed=31))
               for n in (100, 500)}
    small, large = reports[100], reports[500]
    slack = 3 * math.sqrt(small.binomial_se ** 2 + large.binomial_se ** 2)
    assert large.rejection_rate >= small.rejection_rate - slack

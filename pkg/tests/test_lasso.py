
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import make_regression
from lcvt.errors import ConfigError, DegenerateDesign, FoldTooSmall, MaxItersExceeded, SingularDesign
from lcvt.lasso import (LambdaPath, LassoConfig, assign_folds, compute_lambda_path,
                        cross_validate, fit_lasso, fit_lcvt_lasso, fit_ols, fit_path,
                        kkt_certificate, kkt_violation, lasso_objective, one_se_rule)
from lcvt.numerics import DataMatrix, RngState
from oracles import lasso_1d_closed_form, lasso_grid_oracle


def test_config_validation():
    for kwargs in ({"n_lambda": 0}, {"cv_folds": 1}, {"tol": 0.0},
                   {"selection_rule": "best"}, {"lambda_min_ratio": 1.5}):
        with pytest.raises(ConfigError):
            LassoConfig(**kwargs)


def test_default_min_ratio_depends_on_shape():
    cfg = LassoConfig()
    assert cfg.min_ratio(100, 200) == 0.01
    assert cfg.min_ratio(200, 100) == 1e-4


def test_lambda_path_shape(small_data):
    path = compute_lambda_path(small_data)
    v = path.values
    assert len(v) == 100
    assert np.all(np.diff(v) < 0)
    assert np.isclose(v[-1] / v[0], 1e-4)


def test_lambda_max_zeroes_everything(small_data):
    lmax = compute_lambda_path(small_data).values[0]
    for lam in (lmax, 1.0001 * lmax, 10 * lmax):
        fit = fit_lasso(small_data, lam)
        assert fit.n_active == 0
        assert np.isclose(fit.intercept, small_data.y.mean())
    assert fit_lasso(small_data, 0.98 * lmax).n_active >= 1


@pytest.mark.parametrize("fit_intercept", [True, False])
def test_one_covariate_closed_form(fit_intercept):
    rng = np.random.default_rng(2)
    x = 3.0 * rng.standard_normal(40) + 1.0
    y = 0.7 * x + rng.standard_normal(40)
    data = DataMatrix(x[:, None], y)
    cfg = LassoConfig(fit_intercept=fit_intercept)
    for lam in (0.01, 0.3, 1.0, 2.5):
        fit = fit_lasso(data, lam, cfg)
        assert abs(fit.beta[0] - lasso_1d_closed_form(x, y, lam, fit_intercept)) < 1e-6


@pytest.mark.parametrize("seed", range(6))
def test_grid_oracle_two_covariates(seed):
    rng = np.random.default_rng(100 + seed)
    X = rng.standard_normal((30, 2)) @ np.array([[1.0, 0.6], [0.0, 0.8]]) * [1.0, 2.5]
    y = X @ rng.uniform(-1, 1, 2) + rng.standard_normal(30)
    data = DataMatrix(X, y)
    lam = 0.3 * compute_lambda_path(data).values[0]
    for standardize in (True, False):
        fit = fit_lasso(data, lam, LassoConfig(standardize=standardize))
        ref = lasso_grid_oracle(X, y, lam, standardize=standardize)
        assert np.abs(fit.beta - ref).max() < 2e-3


@pytest.mark.parametrize("which", ["small_data", "wide_data"])
def test_kkt_along_path(which, request):
    data = request.getfixturevalue(which)
    path = compute_lambda_path(data)
    for fit in fit_path(data, path):
        assert fit.converged
        assert kkt_certificate(data, fit)


def test_kkt_detects_a_bad_fit(small_data):
    fit = fit_lasso(small_data, 0.05)
    from dataclasses import replace
    bad = replace(fit, beta=fit.beta + 0.01)
    assert not kkt_certificate(small_data, bad)
    assert kkt_violation(small_data, bad).max() > 1e-3


@given(st.integers(0, 2**32 - 1))
@settings(max_examples=25, deadline=None)
def test_fit_beats_random_perturbations(seed):
    data = make_regression(35, 12, seed=seed % 1000)
    lam = 0.1
    fit = fit_lasso(data, lam)
    f0 = lasso_objective(data, fit.beta, fit.intercept, lam, fit.scale)
    rng = np.random.default_rng(seed)
    for _ in range(20):
        b = fit.beta + 1e-3 * rng.standard_normal(data.p)
        a = data.y.mean() - data.X.mean(axis=0) @ b
        assert lasso_objective(data, b, a, lam, fit.scale) >= f0 - 1e-12


def test_rescaling_a_column_rescales_its_coefficient(small_data):
    X = small_data.X.copy()
    X[:, 2] *= 1000.0
    fit0 = fit_lasso(small_data, 0.05)
    fit1 = fit_lasso(DataMatrix(X, small_data.y), 0.05)
    assert np.isclose(fit1.beta[2] * 1000.0, fit0.beta[2], atol=1e-6)
    assert np.abs(fit0.residuals - fit1.residuals).max() < 1e-8


def test_residuals_use_raw_data(small_data):
    fit = fit_lasso(small_data, 0.02)
    expect = small_data.y - fit.intercept - small_data.X @ fit.beta
    assert np.array_equal(fit.residuals, expect)


def test_constant_column_is_left_out():
    data = make_regression(40, 5, seed=3)
    X = data.X.copy()
    X[:, 1] = 2.0
    fit = fit_lasso(DataMatrix(X, data.y), 0.01)
    assert fit.beta[1] == 0.0


def test_all_constant_design_is_degenerate():
    with pytest.raises(DegenerateDesign):
        fit_lasso(DataMatrix(np.ones((20, 3)), np.arange(20.0)), 0.1)


def test_warm_start_gives_same_answer(wide_data):
    cold = fit_lasso(wide_data, 0.05)
    warm = fit_lasso(wide_data, 0.05, warm_start=fit_lasso(wide_data, 0.08).beta)
    assert np.abs(cold.beta - warm.beta).max() < 1e-5


def test_nonconvergence_warns(wide_data):
    with pytest.warns(MaxItersExceeded):
        fit = fit_lasso(wide_data, 0.01, LassoConfig(max_iters=1))
    assert not fit.converged


def test_one_se_rule_examples():
    mean = np.array([5.0, 3.0, 2.2, 2.0, 2.1])
    se = np.array([0.1, 0.1, 0.1, 0.3, 0.1])
    assert one_se_rule(mean, se) == (3, 2)
    # ties at the minimum go to the larger penalty
    assert one_se_rule(np.array([3.0, 1.0, 1.0]), np.zeros(3)) == (1, 1)


def test_folds_are_balanced_and_seeded():
    f1 = assign_folds(103, 10, RngState(5))
    f2 = assign_folds(103, 10, RngState(5))
    assert np.array_equal(f1, f2)
    counts = np.bincount(f1)
    assert counts.max() - counts.min() <= 1
    assert not np.array_equal(f1, assign_folds(103, 10, RngState(6)))


def test_cv_matches_manual_fold_fits(small_data):
    cfg = LassoConfig(cv_folds=5)
    path = LambdaPath(compute_lambda_path(small_data, cfg).values[:30])
    cv = cross_validate(small_data, cfg, RngState(1), path=path)
    errs = []
    for k in range(5):
        test = cv.fold_assignment == k
        train = DataMatrix(small_data.X[~test], small_data.y[~test])
        fits = fit_path(train, path, cfg)
        errs.append([np.mean((small_data.y[test] - f.intercept - small_data.X[test] @ f.beta) ** 2)
                     for f in fits])
    errs = np.array(errs)
    w = np.bincount(cv.fold_assignment) / small_data.n
    assert np.allclose(cv.mean_cv_error, w @ errs, rtol=1e-6)
    assert cv.index_1se <= cv.index_min
    assert cv.lambda_1se >= cv.lambda_min


def test_cv_fold_too_small():
    data = make_regression(8, 3, seed=1)
    with pytest.raises(FoldTooSmall):
        cross_validate(data, LassoConfig(cv_folds=10), RngState(0))


def test_lcvt_lasso_selection_rules(wide_data):
    fit_1se = fit_lcvt_lasso(wide_data, LassoConfig(), RngState(3))
    fit_min = fit_lcvt_lasso(wide_data, LassoConfig(selection_rule="min"), RngState(3))
    assert fit_1se.lam == fit_1se.cv.lambda_1se
    assert fit_min.lam == fit_min.cv.lambda_min
    assert fit_1se.lam >= fit_min.lam
    assert fit_1se.n_active <= fit_min.n_active
    again = fit_lcvt_lasso(wide_data, LassoConfig(), RngState(3))
    assert np.array_equal(again.beta, fit_1se.beta)


def test_ols_matches_lstsq(small_data):
    fit = fit_ols(small_data)
    A = np.column_stack([np.ones(small_data.n), small_data.X])
    coef = np.linalg.lstsq(A, small_data.y, rcond=None)[0]
    assert np.allclose(fit.beta, coef[1:], atol=1e-10)
    assert np.isclose(fit.intercept, coef[0], atol=1e-10)


def test_ols_singular(wide_data, small_data):
    with pytest.raises(SingularDesign):
        fit_ols(wide_data)
    X = small_data.X.copy()
    X[:, 3] = X[:, 2]
    with pytest.raises(SingularDesign):
        fit_ols(DataMatrix(X, small_data.y))


@pytest.mark.parametrize("which", ["small_data", "wide_data"])
def test_objective_never_increases_across_cycles(which, request):
    # a run capped at k cycles is the first k cycles of the uncapped run
    data = request.getfixturevalue(which)
    lam = 0.05 * compute_lambda_path(data).values[0]
    values = []
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", MaxItersExceeded)
        for k in range(1, 40):
            fit = fit_lasso(data, lam, LassoConfig(max_iters=k))
            values.append(lasso_objective(data, fit.beta, fit.intercept, lam, fit.scale))
    assert np.all(np.diff(values) <= 1e-12)
    assert values[-1] < values[0]

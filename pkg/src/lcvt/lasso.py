"""Lasso by cyclic coordinate descent, penalty paths and K-fold cross-validation.

Objective and penalty scale
---------------------------
The regression objective used here is

    (1/n) ||y - a - X b||^2 + 2 * lam * ||b||_1

which is exactly twice the usual ``(1/(2n))||.||^2 + lam ||.||_1`` form, so
both have the same minimiser at the same ``lam`` and the standard soft-threshold
update applies unchanged. ``lam`` is therefore on the same scale as glmnet's
``lambda``. With ``standardize=True`` the penalty acts on standardised
coefficients, i.e. on ``sum_j s_j |b_j|`` with ``s_j`` the column standard
deviation (1/n divisor); coefficients are always reported on the original
scale.
"""

import math
import warnings
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from . import kernels
from .errors import (
    ConfigError,
    DegenerateDesign,
    FoldTooSmall,
    MaxItersExceeded,
    SingularDesign,
)
from .numerics import STREAM_FOLDS, DataMatrix

LAMBDA_FLOOR = 1e-12
OLS_MAX_GRAM_CONDITION = 1e12


@dataclass(frozen=True)
class LassoConfig:
    n_lambda: int = 100
    # None picks 0.01 when p >= n and 1e-4 otherwise
    lambda_min_ratio: Optional[float] = None
    max_iters: int = 100_000
    tol: float = 1e-7
    standardize: bool = True
    fit_intercept: bool = True
    cv_folds: int = 10
    selection_rule: str = "one_se"

    def __post_init__(self):
        if self.n_lambda < 1:
            raise ConfigError("must be >= 1", "n_lambda")
        r = self.lambda_min_ratio
        if r is not None and not 0.0 < r < 1.0:
            raise ConfigError("must lie in (0, 1)", "lambda_min_ratio")
        if self.cv_folds < 2:
            raise ConfigError("must be >= 2", "cv_folds")
        if not self.tol > 0:
            raise ConfigError("must be positive", "tol")
        if self.max_iters < 1:
            raise ConfigError("must be >= 1", "max_iters")
        if self.selection_rule not in ("one_se", "min"):
            raise ConfigError("must be 'one_se' or 'min'", "selection_rule")

    def min_ratio(self, n, p):
        if self.lambda_min_ratio is not None:
            return self.lambda_min_ratio
        return 0.01 if p >= n else 1e-4


@dataclass(frozen=True)
class LambdaPath:
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float64)
        if v.ndim != 1 or len(v) == 0:
            raise ValueError("lambda path must be a non-empty vector")
        if (v <= 0).any() or (np.diff(v) >= 0).any():
            raise ValueError("lambda path must be positive and strictly decreasing")
        object.__setattr__(self, "values", v)

    @property
    def lambda_max(self):
        return float(self.values[0])

    def __len__(self):
        return len(self.values)


@dataclass(frozen=True)
class LassoFit:
    beta: np.ndarray
    intercept: float
    lam: float
    active_set: np.ndarray
    residuals: np.ndarray
    n_iters: int
    converged: bool
    scale: np.ndarray = field(repr=False)
    cv: Optional["CvResult"] = field(default=None, repr=False)

    @property
    def n_active(self):
        return len(self.active_set)


@dataclass(frozen=True)
class CvResult:
    path: LambdaPath
    mean_cv_error: np.ndarray
    se_cv_error: np.ndarray
    index_min: int
    index_1se: int
    fold_assignment: np.ndarray

    @property
    def lambda_min(self):
        return float(self.path.values[self.index_min])

    @property
    def lambda_1se(self):
        return float(self.path.values[self.index_1se])

    def selected_index(self, rule):
        return self.index_1se if rule == "one_se" else self.index_min


@dataclass(frozen=True)
class _Working:
    """Centred/scaled copy of the data the kernel operates on."""

    X: np.ndarray
    y: np.ndarray
    x_mean: np.ndarray
    x_scale: np.ndarray
    y_mean: float
    excluded: np.ndarray
    v: np.ndarray


def _prepare(X, y, config):
    n = X.shape[0]
    if config.fit_intercept:
        x_mean = X.mean(axis=0)
        y_mean = float(y.mean())
    else:
        x_mean = np.zeros(X.shape[1])
        y_mean = 0.0
    Xc = X - x_mean
    spread = np.sqrt((Xc ** 2).mean(axis=0))
    excluded = spread <= 1e-10 * np.maximum(1.0, np.abs(x_mean))
    if excluded.all():
        raise DegenerateDesign("every covariate column has zero variance")
    scale = np.where(excluded, 1.0, spread) if config.standardize else np.ones(X.shape[1])
    Xw = np.asfortranarray(Xc / scale)
    Xw[:, excluded] = 0.0
    v = (Xw ** 2).sum(axis=0) / n
    v[excluded] = 1.0
    return _Working(Xw, y - y_mean, x_mean, scale, y_mean, excluded, v)


def _lambda_max(work):
    n = work.X.shape[0]
    return max(float(np.abs(work.X.T @ work.y).max()) / n, LAMBDA_FLOOR)


def _make_path(lmax, config, n, p):
    ratio = config.min_ratio(n, p)
    if config.n_lambda == 1:
        return LambdaPath(np.array([lmax]))
    return LambdaPath(lmax * np.logspace(0.0, math.log10(ratio), config.n_lambda))


def compute_lambda_path(data, config=LassoConfig()):
    """Log-spaced penalties from ``lambda_max`` down to ``min_ratio * lambda_max``.

    ``lambda_max = max_j |<x_j, y>| / n`` on the working (centred/scaled)
    data, floored at 1e-12 so a response orthogonal to every column still
    yields a valid path.
    """
    if data.n < 2 or data.p < 1:
        raise ValueError("need n >= 2 and p >= 1")
    data.check_finite()
    work = _prepare(data.X, data.y, config)
    return _make_path(_lambda_max(work), config, data.n, data.p)


def _kernel_path(work, lambdas, config, beta_init=None):
    p = work.X.shape[1]
    b0 = np.zeros(p) if beta_init is None else beta_init
    return kernels.cd_path(work.X, work.y, work.v, work.excluded, lambdas, b0,
                           config.tol, 0.5 * config.tol, config.max_iters)


def _to_fit(data, work, b, lam, n_iters, converged, cv=None):
    beta = b / work.x_scale
    beta[work.excluded] = 0.0
    intercept = work.y_mean - float(work.x_mean @ beta)
    residuals = data.y - intercept - data.X @ beta
    if not converged:
        warnings.warn(f"coordinate descent did not converge at lambda={lam:.4g} "
                      f"within {n_iters} iterations", MaxItersExceeded, stacklevel=3)
    return LassoFit(beta=beta, intercept=intercept, lam=float(lam),
                    active_set=np.flatnonzero(beta), residuals=residuals,
                    n_iters=int(n_iters), converged=bool(converged),
                    scale=work.x_scale.copy(), cv=cv)


def fit_lasso(data, lam, config=LassoConfig(), warm_start=None):
    """Minimise the lasso objective at a single penalty ``lam``."""
    if not lam > 0:
        raise ValueError("lambda must be positive")
    data.check_finite()
    work = _prepare(data.X, data.y, config)
    b0 = None
    if warm_start is not None:
        b0 = np.asarray(warm_start, dtype=np.float64) * work.x_scale
    betas, iters, conv = _kernel_path(work, np.array([float(lam)]), config, b0)
    return _to_fit(data, work, betas[:, 0], lam, iters[0], conv[0])


def fit_path(data, path, config=LassoConfig()):
    """Warm-started fits along ``path``; returns a list of :class:`LassoFit`."""
    data.check_finite()
    work = _prepare(data.X, data.y, config)
    betas, iters, conv = _kernel_path(work, path.values, config)
    return [_to_fit(data, work, betas[:, k], lam, iters[k], conv[k])
            for k, lam in enumerate(path.values)]


def one_se_rule(mean_err, se_err):
    """``(index_min, index_1se)`` for errors listed by decreasing penalty.

    ``index_min`` is the largest penalty attaining the minimum mean error;
    ``index_1se`` the largest penalty whose mean error is within one standard
    error of that minimum.
    """
    mean_err = np.asarray(mean_err)
    i_min = int(np.flatnonzero(mean_err <= mean_err.min())[0])
    bound = mean_err[i_min] + se_err[i_min]
    i_1se = int(np.flatnonzero(mean_err <= bound)[0])
    return i_min, i_1se


def assign_folds(n, k, rng):
    """Seeded permutation of ``arange(n) % k``: near-equal fold sizes."""
    folds = np.empty(n, dtype=np.int64)
    folds[rng.generator().permutation(n)] = np.arange(n) % k
    return folds


def cross_validate(data, config=LassoConfig(), rng=None, path=None, folds=None):
    """K-fold CV over the full-data penalty path.

    Each training fold is standardised on its own and fitted along the whole
    path with warm starts; the held-out mean squared prediction error is
    recorded per penalty. Fold errors are averaged with fold-size weights and
    the standard error is ``sqrt(weighted var / (K - 1))``.
    """
    n = data.n
    K = config.cv_folds
    if n < K:
        raise FoldTooSmall(f"n={n} is smaller than the number of folds ({K})")
    data.check_finite()
    if path is None:
        path = compute_lambda_path(data, config)
    if folds is None:
        if rng is None:
            raise ValueError("either rng or folds is required")
        folds = assign_folds(n, K, rng)
    folds = np.asarray(folds)
    sizes = np.bincount(folds, minlength=K)
    if sizes.min() < 2:
        raise FoldTooSmall(f"a fold has only {sizes.min()} observations")

    errs = np.empty((K, len(path)))
    for k in range(K):
        test = folds == k
        Xtr, ytr = data.X[~test], data.y[~test]
        work = _prepare(Xtr, ytr, config)
        betas, _, _ = _kernel_path(work, path.values, config)
        coef = betas / work.x_scale[:, None]
        coef[work.excluded] = 0.0
        intercepts = work.y_mean - work.x_mean @ coef
        pred = data.X[test] @ coef + intercepts
        errs[k] = ((data.y[test][:, None] - pred) ** 2).mean(axis=0)

    w = sizes / sizes.sum()
    mean_err = w @ errs
    se_err = np.sqrt(w @ (errs - mean_err) ** 2 / (K - 1))
    i_min, i_1se = one_se_rule(mean_err, se_err)
    return CvResult(path=path, mean_cv_error=mean_err, se_cv_error=se_err,
                    index_min=i_min, index_1se=i_1se, fold_assignment=folds)


def fit_lcvt_lasso(data, config=LassoConfig(), rng=None):
    """Cross-validate, then refit the full data at the rule-selected penalty.

    The refit follows the full-data path with warm starts down to the
    selected penalty, as glmnet does.
    """
    if rng is None:
        raise ValueError("rng is required")
    data.check_finite()
    work = _prepare(data.X, data.y, config)
    path = _make_path(_lambda_max(work), config, data.n, data.p)
    cv = cross_validate(data, config, rng.spawn(STREAM_FOLDS), path=path)
    k = cv.selected_index(config.selection_rule)
    betas, iters, conv = _kernel_path(work, path.values[:k + 1], config)
    return _to_fit(data, work, betas[:, k], path.values[k], iters[k], conv[k], cv=cv)


def fit_ols(data, fit_intercept=True):
    """Least squares through a thin QR; residuals recomputed from raw data.

    Raises :class:`SingularDesign` when ``p >= n`` or the Gram matrix
    condition number exceeds 1e12.
    """
    n, p = data.n, data.p
    data.check_finite()
    if p >= n or p + int(fit_intercept) > n:
        raise SingularDesign(f"least squares needs p < n (got n={n}, p={p})")
    if fit_intercept:
        x_mean = data.X.mean(axis=0)
        y_mean = float(data.y.mean())
    else:
        x_mean = np.zeros(p)
        y_mean = 0.0
    Xc = data.X - x_mean
    sv = np.linalg.svd(Xc, compute_uv=False)
    if sv[-1] == 0.0 or (sv[0] / sv[-1]) ** 2 > OLS_MAX_GRAM_CONDITION:
        raise SingularDesign("Gram matrix is numerically singular")
    Q, R = np.linalg.qr(Xc)
    beta = np.linalg.solve(R, Q.T @ (data.y - y_mean))
    intercept = y_mean - float(x_mean @ beta)
    residuals = data.y - intercept - data.X @ beta
    return LassoFit(beta=beta, intercept=intercept, lam=0.0,
                    active_set=np.flatnonzero(beta), residuals=residuals,
                    n_iters=0, converged=True, scale=np.ones(p))


def lasso_objective(data, beta, intercept, lam, scale=None):
    """``(1/n)||y - a - X b||^2 + 2 lam sum_j s_j |b_j|`` (``s = 1`` by default)."""
    r = data.y - intercept - data.X @ beta
    s = np.ones(data.p) if scale is None else scale
    return float(r @ r) / data.n + 2.0 * lam * float(np.abs(beta) @ s)


def kkt_violation(data, fit):
    """Per-coordinate stationarity violation of ``fit``, on the original scale.

    Recomputes residuals from ``fit.beta`` and the raw data. For ``b_j != 0``
    the violation is ``|<x_j, r>/n - lam s_j sign(b_j)|``; for ``b_j == 0``
    it is ``max(|<x_j, r>/n| - lam s_j, 0)``.
    """
    r = data.y - fit.intercept - data.X @ fit.beta
    g = data.X.T @ r / data.n
    target = fit.lam * fit.scale
    return np.where(fit.beta != 0,
                    np.abs(g - target * np.sign(fit.beta)),
                    np.maximum(np.abs(g) - target, 0.0))


def kkt_certificate(data, fit, tol=None):
    """True when every violation is at most ``tol * max(1, s_j)``."""
    if tol is None:
        tol = LassoConfig().tol
    return bool((kkt_violation(data, fit) <= tol * np.maximum(1.0, fit.scale)).all())


def with_rule(config, rule):
    return replace(config, selection_rule=rule)

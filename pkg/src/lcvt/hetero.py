"""Coefficient-of-variation statistic of squared residuals and the LCVT decision.

For residuals ``e`` with ``s2 = mean(e**2)`` and ``m4 = mean(e**4)``

    T = sum((e_i**2 - s2)**2) / (n * s2**2) = m4 / s2**2 - 1.

Under homoskedastic Gaussian errors ``sqrt(n) * (T - 2)`` is asymptotically
N(0, 24), which gives ``z = sqrt(n) * (T - 2) / sqrt(24)`` and normal
p-values. ``T`` is computed in the moment-ratio form from compensated sums;
the quadratic form is kept as an independent cross-check.
"""

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import kernels
from .errors import AllZeroResiduals, ConfigError, InsufficientData, NonFiniteInput
from .lasso import LassoConfig, fit_lasso, fit_lcvt_lasso, fit_ols
from .numerics import std_normal_cdf

NULL_MEAN = 2.0
NULL_VARIANCE = 24.0
MIN_N = 10
ALTERNATIVES = ("two_sided", "greater")


@dataclass(frozen=True)
class ResidualSummary:
    residuals: np.ndarray
    sigma2_hat: float
    m4_hat: float

    @property
    def n(self):
        return len(self.residuals)


@dataclass(frozen=True)
class TestResult:
    statistic_T: float
    z: float
    p_value: float
    alternative: str
    alpha: float
    reject: bool
    sigma2_hat: float
    n: int
    p: int
    lambda_used: float
    n_active: int
    engine: str
    calibrated: bool = True
    converged: bool = True

    __test__ = False  # not a pytest class

    def as_dict(self):
        return {k: getattr(self, k) for k in self.__dataclass_fields__}


def residual_summary(residuals):
    e = np.asarray(residuals, dtype=np.float64)
    if e.ndim != 1 or len(e) < 2:
        raise ValueError("need at least two residuals")
    if not np.isfinite(e).all():
        raise NonFiniteInput("residuals contain non-finite values")
    s2, s4 = kernels.residual_moments(e)
    n = len(e)
    sigma2 = s2 / n
    if sigma2 < 1e-300:
        raise AllZeroResiduals(
            "all residuals are zero (perfect fit), so the statistic is undefined; "
            "check for a constant response or use a larger penalty")
    return ResidualSummary(e, sigma2, s4 / n)


def cvt_statistic_quadratic(residuals):
    """Quadratic-deviation form, for cross-checking only."""
    e2 = np.asarray(residuals, dtype=np.float64) ** 2
    s2 = math.fsum(e2) / len(e2)
    return math.fsum((e2 - s2) ** 2) / (len(e2) * s2 * s2)


def cvt_statistic(summary):
    s2 = summary.sigma2_hat
    if s2 < 1e-300:
        raise AllZeroResiduals("sigma2_hat is zero")
    T = max(summary.m4_hat / (s2 * s2) - 1.0, 0.0)
    if __debug__:
        Tq = cvt_statistic_quadratic(summary.residuals)
        assert abs(T - Tq) <= 1e-10 * max(1.0, Tq), (T, Tq)
    return T


def studentize(T, n, alternative="two_sided"):
    """``(z, p_value)`` from the N(0, 24) limit of ``sqrt(n) (T - 2)``."""
    if n < 2:
        raise ValueError("n must be >= 2")
    z = math.sqrt(n) * (T - NULL_MEAN) / math.sqrt(NULL_VARIANCE)
    if alternative == "two_sided":
        p = 2.0 * std_normal_cdf(-abs(z))
    elif alternative == "greater":
        p = std_normal_cdf(-z)
    else:
        raise ConfigError(f"unknown alternative {alternative!r}", "alternative")
    return z, min(p, 1.0)


def _check_test_args(data, alpha, alternative):
    if data.n < MIN_N:
        raise InsufficientData(f"need at least {MIN_N} observations, got {data.n}")
    if not 0.0 < alpha < 1.0:
        raise ConfigError("must lie in (0, 1)", "alpha")
    if alternative not in ALTERNATIVES:
        raise ConfigError(f"must be one of {ALTERNATIVES}", "alternative")


def _result(fit, data, alpha, alternative, engine, calibrated):
    summary = residual_summary(fit.residuals)
    T = cvt_statistic(summary)
    z, p_value = studentize(T, data.n, alternative)
    return TestResult(statistic_T=T, z=z, p_value=p_value, alternative=alternative,
                      alpha=alpha, reject=p_value < alpha, sigma2_hat=summary.sigma2_hat,
                      n=data.n, p=data.p, lambda_used=fit.lam, n_active=fit.n_active,
                      engine=engine, calibrated=calibrated, converged=fit.converged)


def lcvt_test(data, config=LassoConfig(), alpha=0.05, alternative="two_sided",
              rng=None, lam: Optional[float] = None, return_fit=False):
    """Lasso fit (CV-selected penalty, or ``lam`` if given) then the CV test."""
    _check_test_args(data, alpha, alternative)
    if lam is None:
        fit = fit_lcvt_lasso(data, config, rng)
    else:
        fit = fit_lasso(data, lam, config)
    result = _result(fit, data, alpha, alternative, "lasso", True)
    return (result, fit) if return_fit else result


def ols_cvt_statistic(data, fit_intercept=True):
    """``(T, z)`` from OLS residuals, studentised with the naive N(0, 24) limit.

    This is an uncalibrated baseline: the normal limit above is not the
    correct null for OLS residuals when p/n is not small.
    """
    fit = fit_ols(data, fit_intercept)
    T = cvt_statistic(residual_summary(fit.residuals))
    z, _ = studentize(T, data.n)
    return T, z


def ols_test(data, alpha=0.05, alternative="two_sided", fit_intercept=True):
    """Same decision pipeline as :func:`lcvt_test` on OLS residuals (uncalibrated)."""
    _check_test_args(data, alpha, alternative)
    fit = fit_ols(data, fit_intercept)
    return _result(fit, data, alpha, alternative, "ols", False)

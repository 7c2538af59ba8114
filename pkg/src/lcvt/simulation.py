"""Data-generating designs, the irrelevant-covariate augmentation and Monte Carlo campaigns.

Design summary (population R^2 = 0.8 calibration, sigma_0 = 1):

* covariates ``X_i ~ N(0, Sigma)`` with Sigma independent, Toeplitz
  ``rho^|i-j|`` or equicorrelated ``rho^(i != j)``;
* coefficients ``sparse``, ``moderately_sparse`` and ``dense`` are
  ``e_1 + tau * v`` with tau solving ``beta' Sigma beta = 4``; ``half_ones``
  is the low-dimensional design with ones on the first p/2 entries;
* errors ``eps_i = sigma(X_i) * xi_i`` with ``xi`` standard normal and
  independent of ``X``; ``sigma`` is one of the homoskedastic / form1..form6
  scale functions below.

Replication ``r`` of a campaign draws everything from stream
``RngState(base_seed, r)``, so results do not depend on worker count.
"""

import logging
import math
import os
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np
from threadpoolctl import threadpool_limits

from .errors import (
    AllZeroResiduals,
    CampaignAborted,
    ConfigError,
    DegenerateDesign,
    MaxItersExceeded,
    NoPositiveRoot,
    SingularDesign,
)
from .hetero import lcvt_test, ols_test
from .lasso import LassoConfig, kkt_certificate
from .numerics import (
    STREAM_AUGMENT,
    STREAM_DESIGN,
    STREAM_ERRORS,
    DataMatrix,
    RngState,
    cholesky,
    sample_mvn,
)

log = logging.getLogger(__name__)

COVARIANCE_KINDS = ("independent", "toeplitz", "equicorr")
COEFFICIENT_KINDS = ("sparse", "moderately_sparse", "dense", "half_ones")
FORMS = ("homoskedastic", "form1", "form2", "form3", "form4", "form5", "form6")
ENGINES = ("lasso", "ols_baseline")
SIGMA_FLOOR = 1e-12
FORM1_RHO = 0.4
TARGET_SIGNAL_VARIANCE = 4.0  # R^2 = 0.8 with unit error variance
WORKERS_ENV = "LCVT_WORKERS"


@dataclass(frozen=True)
class CovarianceSpec:
    kind: str
    p: int
    rho: float = 0.0

    def __post_init__(self):
        if self.kind not in COVARIANCE_KINDS:
            raise ConfigError(f"unknown kind {self.kind!r}", "covariance.kind")
        if self.p < 1:
            raise ConfigError("must be >= 1", "covariance.p")
        if self.kind == "toeplitz" and not -1.0 < self.rho < 1.0:
            raise ConfigError("toeplitz rho must lie in (-1, 1)", "covariance.rho")
        if self.kind == "equicorr" and not 0.0 <= self.rho < 1.0:
            raise ConfigError("equicorr rho must lie in [0, 1)", "covariance.rho")

    @property
    def label(self):
        return "independent" if self.kind == "independent" else f"{self.kind}{self.rho:g}"


@dataclass(frozen=True)
class CoefficientSpec:
    kind: str
    p: int
    tau: Optional[float] = None

    def __post_init__(self):
        if self.kind not in COEFFICIENT_KINDS:
            raise ConfigError(f"unknown kind {self.kind!r}", "coefficients.kind")
        need = {"sparse": 5, "moderately_sparse": 20, "dense": 2, "half_ones": 2}[self.kind]
        if self.p < need:
            raise ConfigError(f"{self.kind} needs p >= {need}", "coefficients.p")
        if self.tau is not None and not self.tau > 0:
            raise ConfigError("must be positive", "coefficients.tau")


@dataclass(frozen=True)
class ScenarioSpec:
    n: int
    p: int
    covariance: CovarianceSpec
    coefficients: CoefficientSpec
    form: str = "homoskedastic"
    alpha: float = 0.05
    alternative: str = "two_sided"
    reps: int = 100
    base_seed: int = 0
    engine: str = "lasso"
    augment_d: Optional[int] = None
    augment_rho: float = 0.9
    lasso: LassoConfig = field(default_factory=LassoConfig)
    id: str = ""

    def __post_init__(self):
        if self.reps < 1:
            raise ConfigError("must be >= 1", "reps")
        if self.n < 2 or self.p < 2:
            raise ConfigError("n and p must be >= 2", "n")
        if self.covariance.p != self.p or self.coefficients.p != self.p:
            raise ConfigError("covariance/coefficients dimension differs from p", "p")
        if self.form not in FORMS:
            raise ConfigError(f"unknown form {self.form!r}", "form")
        if self.form in ("form4", "form5", "form6") and self.p % 10:
            raise ConfigError(f"{self.form} needs p divisible by 10", "p")
        if self.engine not in ENGINES:
            raise ConfigError(f"unknown engine {self.engine!r}", "engine")
        if not 0.0 < self.alpha < 1.0:
            raise ConfigError("must lie in (0, 1)", "alpha")
        if self.alternative not in ("two_sided", "greater"):
            raise ConfigError(f"unknown alternative {self.alternative!r}", "alternative")
        if self.augment_d is not None and self.augment_d < 0:
            raise ConfigError("must be >= 0", "augment_d")

    @property
    def p_total(self):
        return self.p + (self.augment_d or 0)


@dataclass(frozen=True)
class TruthRecord:
    beta0: np.ndarray
    sigma: np.ndarray
    errors: np.ndarray


@dataclass(frozen=True)
class RejectionReport:
    scenario: ScenarioSpec
    rejection_rate: Optional[float]
    reps_completed: int
    failures: int
    binomial_se: Optional[float]
    mean_T: Optional[float]
    mean_active: Optional[float]
    kkt_ok: bool = True
    note: str = ""


# --------------------------------------------------------------------------
# design pieces


def build_covariance(spec):
    p = spec.p
    if spec.kind == "independent":
        return np.eye(p)
    if spec.kind == "toeplitz":
        idx = np.arange(p)
        return spec.rho ** np.abs(idx[:, None] - idx[None, :]).astype(np.float64)
    sigma = np.full((p, p), float(spec.rho))
    np.fill_diagonal(sigma, 1.0)
    return sigma


def _direction(kind, p):
    v = np.zeros(p)
    if kind == "sparse":
        v[1:5] = 1.0
    elif kind == "moderately_sparse":
        v[1:10] = 5.0
        v[10:20] = 1.0
    elif kind == "dense":
        v[1:] = 1.0 / np.sqrt(np.arange(2, p + 1))
    else:
        raise ConfigError(f"tau is not defined for {kind!r}", "coefficients.kind")
    return v


def coefficient_vector(spec, tau=None):
    p = spec.p
    if spec.kind == "half_ones":
        beta = np.zeros(p)
        beta[: p // 2] = 1.0
        return beta
    tau = spec.tau if tau is None else tau
    if tau is None:
        raise ValueError("tau is required")
    beta = tau * _direction(spec.kind, p)
    beta[0] = 1.0
    return beta


def calibrate_tau(covariance, coefficients, target_r2=0.8, sigma=None):
    """Positive tau with population ``beta(tau)' Sigma beta(tau) = r2 / (1 - r2)``.

    ``beta(tau) = e_1 + tau v`` so the equation is ``a tau^2 + b tau + c = t``
    with ``a = v'Sv``, ``b = 2 e_1'Sv``, ``c = S_11``.
    """
    if not 0.0 < target_r2 < 1.0:
        raise ValueError("target_r2 must lie in (0, 1)")
    S = build_covariance(covariance) if sigma is None else sigma
    v = _direction(coefficients.kind, coefficients.p)
    Sv = S @ v
    a = float(v @ Sv)
    b = 2.0 * float(Sv[0])
    c = float(S[0, 0])
    t = target_r2 / (1.0 - target_r2)
    disc = b * b - 4.0 * a * (c - t)
    if disc < 0:
        raise NoPositiveRoot("signal-variance equation has no real root")
    sq = math.sqrt(disc)
    # cancellation-free pair of roots
    q = -0.5 * (b + math.copysign(sq, b)) if b != 0 else -0.5 * sq
    roots = [q / a, (c - t) / q] if q != 0 else [0.0]
    positive = sorted(r for r in roots if r > 0)
    if not positive:
        raise NoPositiveRoot(f"no positive tau (c={c:.4g}, target={t:.4g})")
    return positive[0]


def _first_tenth(X):
    return X[:, : X.shape[1] // 10]


def sigma_function(form, X, beta0):
    """Conditional error standard deviations ``sigma(X_i)``, floored at 1e-12."""
    X = np.asarray(X, dtype=np.float64)
    n, p = X.shape
    if form == "homoskedastic":
        return np.ones(n)
    if form in ("form4", "form5", "form6") and p < 10:
        raise ConfigError(f"{form} needs p >= 10", "form")
    if form == "form1":
        s = np.exp(FORM1_RHO * (X @ beta0))
    elif form == "form2":
        u = (1.0 + X @ beta0) ** 2
        s = np.sqrt(u / u.mean())
    elif form == "form3":
        s = (1.0 + np.sin(10.0 * X) @ (1.0 / np.arange(1, p + 1))) ** 2
    elif form == "form4":
        s = np.exp(0.5 * _first_tenth(X).sum(axis=1))
    elif form == "form5":
        s = (1.0 + 0.5 * np.sin(10.0 * _first_tenth(X)).sum(axis=1)) ** 2
    elif form == "form6":
        s = (1.0 + 0.5 * _first_tenth(X).sum(axis=1)) ** 2
    else:
        raise ConfigError(f"unknown form {form!r}", "form")
    low = s < SIGMA_FLOOR
    if low.any():
        log.debug("%s: %d sigma values floored at %g", form, int(low.sum()), SIGMA_FLOOR)
        s = np.where(low, SIGMA_FLOOR, s)
    return s


@dataclass(frozen=True)
class _Design:
    chol: np.ndarray
    beta0: np.ndarray
    tau: Optional[float]
    augment_chol: Optional[np.ndarray] = None


def prepare_design(spec):
    """Cholesky factor, tau and beta0 shared by every replication of ``spec``."""
    sigma = build_covariance(spec.covariance)
    chol = cholesky(sigma)
    tau = spec.coefficients.tau
    if tau is None and spec.coefficients.kind != "half_ones":
        tau = calibrate_tau(spec.covariance, spec.coefficients, sigma=sigma)
    beta0 = coefficient_vector(spec.coefficients, tau)
    aug = None
    if spec.augment_d:
        aug = cholesky(build_covariance(CovarianceSpec("toeplitz", spec.augment_d,
                                                       spec.augment_rho)))
    return _Design(chol, beta0, tau, aug)


def generate_dataset(spec, rng, design=None):
    """One sample ``(DataMatrix, TruthRecord)`` from the design of ``spec``."""
    if design is None:
        design = prepare_design(spec)
    X = sample_mvn(rng.spawn(STREAM_DESIGN), design.chol, spec.n)
    xi = rng.spawn(STREAM_ERRORS).generator().standard_normal(spec.n)
    sigma = sigma_function(spec.form, X, design.beta0)
    eps = sigma * xi
    y = X @ design.beta0 + eps
    return DataMatrix(X, y), TruthRecord(design.beta0, sigma, eps)


def augment_with_irrelevant(data, d, rho=0.9, rng=None, chol=None):
    """Append ``d`` Toeplitz(rho) Gaussian columns independent of ``data``."""
    if d < 0:
        raise ValueError("d must be >= 0")
    if d == 0:
        return data
    if rng is None:
        raise ValueError("rng is required")
    if chol is None:
        chol = cholesky(build_covariance(CovarianceSpec("toeplitz", d, rho)))
    W = sample_mvn(rng, chol, data.n)
    names = data.feature_names
    if names:
        names = names + tuple(f"W{j + 1}" for j in range(d))
    return DataMatrix(np.hstack([data.X, W]), data.y, names)


# --------------------------------------------------------------------------
# campaigns

_EXPECTED_FAILURES = (AllZeroResiduals, SingularDesign, DegenerateDesign)


def default_workers():
    value = os.environ.get(WORKERS_ENV, "").strip()
    if value:
        try:
            workers = int(value)
        except ValueError:
            raise ConfigError(f"must be an integer, got {value!r}", WORKERS_ENV) from None
        if workers < 1:
            raise ConfigError("must be >= 1", WORKERS_ENV)
        return workers
    return os.cpu_count() or 1


def _run_test(data, engine, config, alpha, alternative, rng, check_kkt):
    """``(reject, T, n_active, kkt_ok)`` or None when the replication fails."""
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", MaxItersExceeded)
            if engine == "lasso":
                res, fit = lcvt_test(data, config, alpha, alternative, rng,
                                     return_fit=True)
            else:
                res = ols_test(data, alpha, alternative, config.fit_intercept)
                fit = None
    except _EXPECTED_FAILURES as exc:
        log.debug("replication failed: %s", exc)
        return None
    if not res.converged:
        return None
    kkt_ok = True
    if check_kkt and fit is not None:
        kkt_ok = kkt_certificate(data, fit, config.tol)
    return res.reject, res.statistic_T, res.n_active, kkt_ok


def _map_reps(task, reps, workers, progress):
    if workers is None:
        workers = default_workers()

    def run(r):
        out = task(r)
        if progress is not None:
            progress(r)
        return out

    with threadpool_limits(limits=1):
        if workers == 1:
            return [run(r) for r in range(reps)]
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(run, range(reps)))


def _summarise(scenario, outcomes, label):
    reps = len(outcomes)
    done = [o for o in outcomes if o is not None]
    failures = reps - len(done)
    if failures > 0.2 * reps:
        raise CampaignAborted(f"{failures} of {reps} replications failed in {label}")
    k = len(done)
    if k == 0:
        return RejectionReport(scenario, None, 0, failures, None, None, None)
    rate = sum(1 for o in done if o[0]) / k
    return RejectionReport(
        scenario=scenario,
        rejection_rate=rate,
        reps_completed=k,
        failures=failures,
        binomial_se=math.sqrt(rate * (1.0 - rate) / k),
        mean_T=math.fsum(o[1] for o in done) / k,
        mean_active=math.fsum(o[2] for o in done) / k,
        kkt_ok=all(o[3] for o in done),
    )


def run_campaign(spec, workers=None, progress=None, check_kkt=True):
    """Monte Carlo rejection rate of ``spec``.

    Failed replications (non-convergence, zero residuals, singular design)
    are excluded from the rate and counted; more than 20% failures raises
    :class:`CampaignAborted`. For the OLS baseline with ``p_total >= n`` the
    test is undefined and the report carries ``rejection_rate=None``.
    """
    if spec.engine == "ols_baseline" and spec.p_total >= spec.n:
        return RejectionReport(spec, None, 0, spec.reps, None, None, None,
                               note="SingularDesign: p >= n")
    design = prepare_design(spec)

    def task(r):
        rng = RngState(spec.base_seed, r)
        data, _ = generate_dataset(spec, rng, design)
        if spec.augment_d:
            data = augment_with_irrelevant(data, spec.augment_d, spec.augment_rho,
                                           rng.spawn(STREAM_AUGMENT), design.augment_chol)
        return _run_test(data, spec.engine, spec.lasso, spec.alpha, spec.alternative,
                         rng, check_kkt)

    outcomes = _map_reps(task, spec.reps, workers, progress)
    return _summarise(spec, outcomes, f"scenario {spec.id or '<unnamed>'}")


def run_augmentation(data, d, reps, base_seed=0, engine="lasso", config=LassoConfig(),
                     alpha=0.05, alternative="two_sided", rho=0.9, workers=None,
                     progress=None, check_kkt=False):
    """Rejection rate on fixed ``data`` with ``d`` fresh irrelevant columns per replication.

    Returns a :class:`RejectionReport` whose ``scenario`` is None.
    """
    if engine not in ENGINES:
        raise ConfigError(f"unknown engine {engine!r}", "engine")
    if engine == "ols_baseline" and data.p + d >= data.n:
        return RejectionReport(None, None, 0, reps, None, None, None,
                               note="SingularDesign: p >= n")
    chol = None
    if d:
        chol = cholesky(build_covariance(CovarianceSpec("toeplitz", d, rho)))

    def task(r):
        rng = RngState(base_seed, r)
        aug = augment_with_irrelevant(data, d, rho, rng.spawn(STREAM_AUGMENT), chol)
        return _run_test(aug, engine, config, alpha, alternative, rng, check_kkt)

    outcomes = _map_reps(task, reps, workers, progress)
    return _summarise(None, outcomes, f"augmentation d={d}")


def with_reps(spec, reps=None, base_seed=None):
    changes = {}
    if reps is not None:
        changes["reps"] = reps
    if base_seed is not None:
        changes["base_seed"] = base_seed
    return replace(spec, **changes) if changes else spec

"""Seeded random streams, Gaussian sampling, Cholesky and small scalar helpers.

Random numbers come from numpy's PCG64 seeded through ``SeedSequence`` with
``spawn_key = (stream_id, *substream)``, so replication ``r`` of a campaign
owns stream ``r`` and sub-tasks inside a replication (design matrix, errors,
fold assignment, augmentation) own disjoint child streams. Normal draws use
numpy's ziggurat sampler (``Generator.standard_normal``).
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import NonFiniteInput, NotPositiveDefinite, NotSymmetric

# child stream indices used throughout the package
STREAM_DESIGN = 0
STREAM_ERRORS = 1
STREAM_FOLDS = 2
STREAM_AUGMENT = 3


@dataclass(frozen=True)
class RngState:
    """Value-semantic handle on a reproducible random stream."""

    seed: int
    stream_id: int = 0
    substream: tuple = ()

    def __post_init__(self):
        for name in ("seed", "stream_id"):
            value = getattr(self, name)
            if not 0 <= int(value) < 2**64:
                raise ValueError(f"{name} must be a 64-bit unsigned integer")

    def generator(self):
        ss = np.random.SeedSequence(int(self.seed),
                                    spawn_key=(int(self.stream_id), *self.substream))
        return np.random.Generator(np.random.PCG64(ss))

    def spawn(self, index):
        """Independent child stream; does not alter ``self``."""
        return RngState(self.seed, self.stream_id, self.substream + (int(index),))

    def with_stream(self, stream_id):
        return RngState(self.seed, stream_id)


@dataclass(frozen=True)
class DataMatrix:
    """Covariates ``X`` (n x p) and response ``y`` (n,)."""

    X: np.ndarray
    y: np.ndarray
    feature_names: tuple = field(default=())

    def __post_init__(self):
        X = np.asarray(self.X, dtype=np.float64)
        y = np.asarray(self.y, dtype=np.float64)
        if X.ndim == 1:
            X = X[:, None]
        if X.ndim != 2 or y.ndim != 1:
            raise ValueError("X must be 2-D and y 1-D")
        if X.shape[0] != y.shape[0]:
            raise ValueError(f"X has {X.shape[0]} rows but y has {y.shape[0]}")
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "feature_names", tuple(self.feature_names))

    @property
    def n(self):
        return self.X.shape[0]

    @property
    def p(self):
        return self.X.shape[1]

    def check_finite(self):
        if not (np.isfinite(self.X).all() and np.isfinite(self.y).all()):
            raise NonFiniteInput("data contain NaN or infinite values")


def cholesky(sigma):
    """Lower-triangular ``L`` with ``L @ L.T == sigma``.

    Raises :class:`NotSymmetric` when ``sigma`` is asymmetric beyond 1e-12
    relative, and :class:`NotPositiveDefinite` when any pivot ``L[j, j]**2``
    falls to ``1e-14 * max(diag(sigma))`` or below.
    """
    sigma = np.asarray(sigma, dtype=np.float64)
    if sigma.ndim != 2 or sigma.shape[0] != sigma.shape[1]:
        raise ValueError("sigma must be square")
    if not np.isfinite(sigma).all():
        raise NonFiniteInput("sigma contains non-finite entries")
    scale = np.abs(sigma).max(initial=0.0)
    if np.abs(sigma - sigma.T).max(initial=0.0) > 1e-12 * scale:
        raise NotSymmetric("sigma is not symmetric")
    floor = 1e-14 * np.diag(sigma).max(initial=0.0)
    try:
        L = np.linalg.cholesky(sigma)
    except np.linalg.LinAlgError as exc:
        raise NotPositiveDefinite(str(exc)) from None
    pivots = np.diag(L) ** 2
    if sigma.shape[0] and (pivots <= floor).any():
        j = int(np.argmax(pivots <= floor))
        raise NotPositiveDefinite(f"pivot {j} is {pivots[j]:.3e}, below {floor:.3e}")
    return L


def sample_std_normal(rng, n):
    if n < 1:
        raise ValueError("n must be >= 1")
    return rng.generator().standard_normal(n)


def sample_mvn(rng, chol, n):
    """``n`` rows ``L @ z`` with ``z`` standard normal; shape (n, p)."""
    chol = np.asarray(chol, dtype=np.float64)
    p = chol.shape[0]
    Z = rng.generator().standard_normal((n, p))
    return Z @ chol.T


def std_normal_cdf(x):
    return 0.5 * math.erfc(-x / math.sqrt(2.0))


def soft_threshold(z, gamma):
    """``sign(z) * max(|z| - gamma, 0)``; works on scalars and arrays."""
    if np.any(np.asarray(gamma) < 0):
        raise ValueError("gamma must be non-negative")
    out = np.sign(z) * np.maximum(np.abs(z) - gamma, 0.0)
    if np.ndim(out) == 0:
        return float(out)
    return out

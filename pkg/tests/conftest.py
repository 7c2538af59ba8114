import numpy as np
import pytest

from lcvt.numerics import DataMatrix

# lines appended by tests/test_acceptance.py, echoed in the terminal summary
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


def make_regression(n, p, seed, k=3, noise=1.0, hetero=False):
    rng = np.random.default_rng(seed)
    X = rng.standard_normal((n, p))
    beta = np.zeros(p)
    beta[:k] = rng.uniform(0.5, 2.0, size=k) * rng.choice([-1, 1], size=k)
    sd = np.exp(0.7 * X[:, 0]) if hetero else 1.0
    y = 0.3 + X @ beta + noise * sd * rng.standard_normal(n)
    return DataMatrix(X, y)


@pytest.fixture
def small_data():
    return make_regression(60, 8, seed=11)


@pytest.fixture
def wide_data():
    return make_regression(50, 120, seed=12)

import numpy as np
import pytest

from ridgesplit.config import ExperimentConfig
from ridgesplit.rng import RngSeed, sample_spd_covariance

ACCEPTANCE_LINES = []


def record(criterion, ok, detail):
    line = f"criterion {criterion:>2}: {'PASS' if ok else 'FAIL'}  {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    return ok


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture
def spd3():
    return sample_spd_covariance(3, "random", RngSeed(11, 1, 3))


@pytest.fixture
def small_config():
    return ExperimentConfig(m=60, n=3, c=0.1, sigma=0.1, alpha=2.0, seed=5)


def within(a, b, tol):
    return abs(a - b) <= tol


def combined(*stderrs):
    return float(np.sqrt(sum(s * s for s in stderrs)))


def brute_force_given_x(x, p, c, sigma, alpha, draws, seed):
    """Mean and stderr of the raw statistic over (b, eps) with X held fixed."""
    m, n = x.shape
    x1, x2 = x[:p], x[p:]
    gx = np.linalg.solve(x1.T @ x1 + alpha * np.eye(n), x1.T)  # n x p
    rng = np.random.default_rng(seed)
    vals = []
    for start in range(0, draws, 50_000):
        k = min(50_000, draws - start)
        b = c * rng.standard_normal((k, n))
        eps = rng.standard_normal((k, m))
        y = b @ x.T + sigma * eps
        bhat = y[:, :p] @ gx.T
        resid = bhat @ x2.T - y[:, p:]
        vals.append(((resid**2).sum(axis=1) / (m - p) - sigma**2) ** 2)
    vals = np.concatenate(vals)
    return vals.mean(), vals.std(ddof=1) / np.sqrt(draws)

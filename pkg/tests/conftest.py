import numpy as np
import pytest

from psilingam.dataset import DataMatrix
from psilingam.simbench import simulate


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


def exact_cov_data(cov, n, seed=0):
    """Samples whose sample covariance (ddof=1) equals ``cov`` exactly."""
    rng = np.random.default_rng(seed)
    z = rng.standard_normal((n, cov.shape[0]))
    z -= z.mean(axis=0)
    # whiten to an identity sample covariance, then color
    L = np.linalg.cholesky(np.cov(z, rowvar=False))
    z = z @ np.linalg.inv(L).T
    return z @ np.linalg.cholesky(cov).T


def sem(p, d, n, seed, noise="Exp"):
    return simulate(p, d, n, noise, seed)


def as_data(x, labels=None):
    return DataMatrix.from_array(np.asarray(x, dtype=float), labels)


ACCEPTANCE_LINES: list[str] = []


def record_criterion(number: int, passed: bool, detail: str) -> None:
    ACCEPTANCE_LINES.append(f"criterion {number}: {'PASS' if passed else 'FAIL'}  {detail}")


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)

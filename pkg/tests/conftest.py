import numpy as np
import pytest

CRITERIA: list[str] = []


def record_criterion(number: int, passed: bool, detail: str) -> None:
    line = f"criterion {number}: {'PASS' if passed else 'FAIL'} - {detail}"
    CRITERIA.append(line)
    print(line)


def pytest_terminal_summary(terminalreporter):
    if CRITERIA:
        terminalreporter.section("acceptance criteria")
        for line in CRITERIA:
            terminalreporter.write_line(line)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def two_gaussians_20():
    """20-point 2D instance: 10 points around (-1,-1) labelled -1, 10 around (1,1) labelled +1."""
    r = np.random.default_rng(0)
    X = np.vstack([r.normal(-1.0, 1.0, (10, 2)), r.normal(1.0, 1.0, (10, 2))])
    y = np.r_[-np.ones(10), np.ones(10)]
    return X, y

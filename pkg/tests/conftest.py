import numpy as np
import pytest

from noisycopies import Dataset, SyntheticSpec, gen_synthetic

ACCEPTANCE_LINES = []


@pytest.fixture
def record_acceptance():
    def record(number, passed, detail):
        ACCEPTANCE_LINES.append(f"criterion {number}: {'PASS' if passed else 'FAIL'}  {detail}")
    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture
def fig2_data():
    return gen_synthetic(SyntheticSpec(20, 15, 0.5, 0.2, 0))


@pytest.fixture
def tiny():
    X = np.array([[1.0, 0.5], [-0.3, 2.0], [0.7, -1.1], [1.5, 0.2]])
    y = np.array([1.0, -2.0, 0.5, 3.0])
    return Dataset(X, y)

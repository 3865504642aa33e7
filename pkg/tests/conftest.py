import numpy as np
import pytest

from outlier_gate.dataset import iris, iris_outlier_fixture

ACCEPTANCE_LINES = []


@pytest.fixture(scope="session")
def fixture_ds():
    return iris_outlier_fixture()


@pytest.fixture(scope="session")
def iris_ds():
    return iris()


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)

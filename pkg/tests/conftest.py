import numpy as np
import pytest

from kdv_ist.acceptance import cached_direct


@pytest.fixture(scope="session")
def zero_run():
    return cached_direct("zero")


@pytest.fixture(scope="session")
def gaussian_run():
    return cached_direct("gaussian")


@pytest.fixture(scope="session")
def soliton_run():
    return cached_direct("soliton")


@pytest.fixture(scope="session")
def piecewise_run():
    return cached_direct("piecewise")


@pytest.fixture(scope="session")
def kappa():
    return 0.5 * np.sqrt(np.pi)


def pytest_terminal_summary(terminalreporter):
    from test_acceptance import REPORT

    if REPORT:
        terminalreporter.section("acceptance criteria")
        for line in REPORT:
            terminalreporter.write_line(line)

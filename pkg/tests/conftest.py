import numpy as np
import pytest

from salience.election import ElectionInstance


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def binary_instance(rng, n, ell, m=2, p=2.0):
    """Random binary voters against the all-ones / all-zeros candidates."""
    cands = np.vstack([np.ones(ell), np.zeros(ell)])
    if m > 2:
        cands = np.vstack([cands, rng.integers(0, 2, size=(m - 2, ell))])
    voters = rng.integers(0, 2, size=(n, ell)).astype(float)
    return ElectionInstance(cands, voters, rng.dirichlet(np.ones(ell)), p)


def real_instance(rng, n, ell, m=2, p=2.0):
    return ElectionInstance(rng.random((m, ell)), rng.random((n, ell)), rng.dirichlet(np.ones(ell)), p)


def pytest_terminal_summary(terminalreporter):
    from acceptance_log import report

    lines = report()
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)

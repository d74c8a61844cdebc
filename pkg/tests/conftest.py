import numpy as np
import pytest

from covns.graph import WeightedDigraph

ACCEPTANCE_LINES = []


def random_weights(rng, n, density=0.6, symmetric=False):
    w = rng.uniform(0.1, 5.0, (n, n)) * (rng.random((n, n)) < density)
    if symmetric:
        w = np.triu(w, 1)
        w = w + w.T
    np.fill_diagonal(w, 0.0)
    if w.sum() == 0:
        w[0, 1 % n] = 1.0 if n > 1 else 0.0
    return w


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def two_blocks():
    """Six nodes, two dense blocks {1,2,3} and {4,5,6} with a weak bridge."""
    w = np.zeros((6, 6))
    for block in ((0, 1, 2), (3, 4, 5)):
        for i in block:
            for j in block:
                if i != j:
                    w[i, j] = 5.0
    w[2, 3] = w[3, 2] = 1.0
    return WeightedDigraph(w)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)

import itertools

import numpy as np
import pytest

from hyperprop import limits
from hyperprop.core import Hypergraph

FANO = [(1, 2, 3), (1, 4, 5), (1, 6, 7), (2, 4, 6), (2, 5, 7), (3, 4, 7), (3, 5, 6)]


@pytest.fixture(autouse=True)
def _fresh_limits():
    limits.reset()
    yield
    limits.reset()


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def fano():
    return Hypergraph(3, 7, frozenset(tuple(v - 1 for v in e) for e in FANO))


def graph(n, edges):
    return Hypergraph(2, n, frozenset(tuple(sorted(e)) for e in edges))


def brute_maxcut(G):
    best = 0
    for side in itertools.product((0, 1), repeat=G.n):
        best = max(best, sum(side[u] != side[v] for u, v in G.edges))
    return best


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = getattr(config, "_acceptance_lines", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)

"""Shared oracles.

Everything here is computed straight from the edge list with dense numpy, so
it stays independent of the package's sparse operators and local engines.
"""

import itertools

import numpy as np
import pytest

from paspec.pa_graph import Graph, generate

ACCEPTANCE_LINES: list[str] = []


def dense_adjacency(g: Graph) -> np.ndarray:
    a = np.zeros((g.n, g.n))
    for (u, v), c in zip(g.edges.tolist(), g.mult.tolist()):
        a[u - 1, v - 1] += c
        a[v - 1, u - 1] += c
    return a


def dense_walk(g: Graph) -> np.ndarray:
    a = dense_adjacency(g)
    return a / a.sum(axis=1, keepdims=True)


def dense_norm_adjacency(g: Graph) -> np.ndarray:
    a = dense_adjacency(g)
    isd = 1.0 / np.sqrt(a.sum(axis=1))
    return isd[:, None] * a * isd[None, :]


def path_sum_return(p: np.ndarray, u: int, k: int) -> float:
    """Sum over every closed vertex sequence u = v0, ..., vk = u of Π P(v_t, v_t+1).

    Literal enumeration of all n^(k-1) intermediate sequences; 0-based ``u``.
    """
    n = p.shape[0]
    if k == 0:
        return 1.0
    if k == 1:
        return float(p[u, u])
    mids = np.array(list(itertools.product(range(n), repeat=k - 1)), dtype=np.int64)
    seq = np.column_stack([np.full(len(mids), u), mids, np.full(len(mids), u)])
    weights = np.ones(len(seq))
    for t in range(k):
        weights *= p[seq[:, t], seq[:, t + 1]]
    return float(weights.sum())


@pytest.fixture(scope="session")
def g300():
    return generate(300, 2, 4)


@pytest.fixture(scope="session")
def two_vertex():
    return generate(2, 3, 0)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)

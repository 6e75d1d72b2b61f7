import io

import numpy as np
import pytest

from paspec import DenseLimitError, DomainError, Kind, OperatorView, generate
from paspec.operators import DENSE_LIMIT_ENV, dense_limit
from conftest import dense_adjacency, dense_norm_adjacency, dense_walk


def test_two_vertex_norm_adjacency():
    g = generate(2, 4, 0)
    view = OperatorView(g, Kind.NORM_ADJACENCY)
    assert view.entry(1, 2) == 1.0
    assert view.materialize_dense().tolist() == [[0.0, 1.0], [1.0, 0.0]]


def test_norm_adjacency_zero_diagonal(g300):
    view = OperatorView(g300, Kind.NORM_ADJACENCY)
    assert all(view.entry(u, u) == 0.0 for u in range(1, g300.n + 1))


def test_walk_kernel_entries_from_edge_list():
    g = generate(6, 2, 3)
    mult = {(int(u), int(v)): int(c) for (u, v), c in zip(g.edges, g.mult)}
    view = OperatorView(g, Kind.WALK_KERNEL)
    for u in range(1, 7):
        d = sum(c for (a, b), c in mult.items() if u in (a, b))
        for v in range(1, 7):
            c = mult.get((min(u, v), max(u, v)), 0)
            assert view.entry(u, v) == pytest.approx(c / d, abs=1e-15)


def test_laplacian_entries(g300):
    view = OperatorView(g300, Kind.LAPLACIAN)
    ref = np.eye(g300.n) - dense_norm_adjacency(g300)
    for u, v in [(1, 1), (1, 2), (3, 150), (299, 300), (7, 7)]:
        assert view.entry(u, v) == pytest.approx(ref[u - 1, v - 1], abs=1e-15)


def test_walk_kernel_fixes_ones(g300):
    out = OperatorView(g300, Kind.WALK_KERNEL).apply(np.ones(g300.n))
    assert np.allclose(out, 1.0, atol=1e-14)


def test_sqrt_degree_is_fixed_by_norm_adjacency(g300):
    x = np.sqrt(g300.degrees.astype(float))
    assert np.allclose(OperatorView(g300, Kind.NORM_ADJACENCY).apply(x), x, atol=1e-12)
    assert np.allclose(OperatorView(g300, Kind.LAPLACIAN).apply(x), 0.0, atol=1e-12)


def test_laplacian_on_delta():
    g = generate(50, 2, 17)
    view = OperatorView(g, Kind.LAPLACIAN)
    dense = view.materialize_dense()
    d = g.degrees
    for u in (1, 10, 50):
        delta = np.zeros(g.n)
        delta[u - 1] = 1.0
        out = view.apply(delta)
        assert np.allclose(out, dense[:, u - 1], atol=1e-15)
        expected = np.zeros(g.n)
        expected[u - 1] = 1.0
        for v, c in g.neighbors(u).items():
            expected[v - 1] = -c / np.sqrt(d[u - 1] * d[v - 1])
        assert np.allclose(out, expected, atol=1e-15)


@pytest.mark.parametrize("kind", list(Kind))
def test_apply_matches_dense(kind):
    g = generate(500, 3, 8)
    view = OperatorView(g, kind)
    x = np.random.default_rng(0).standard_normal(g.n)
    assert np.max(np.abs(view.apply(x) - view.materialize_dense() @ x)) <= 1e-12


def test_dense_walk_equals_degree_scaled_adjacency():
    g = generate(200, 2, 5)
    walk = OperatorView(g, Kind.WALK_KERNEL).materialize_dense()
    adj = dense_adjacency(g)
    assert np.max(np.abs(walk - adj / g.degrees[:, None])) <= 1e-15


def test_diagonal_of_powers_agree(g300):
    w = dense_norm_adjacency(g300)
    p = dense_walk(g300)
    wk, pk = np.eye(g300.n), np.eye(g300.n)
    for _ in range(8):
        wk, pk = wk @ w, pk @ p
        assert np.max(np.abs(np.diag(wk) - np.diag(pk))) <= 1e-10


def test_norm_adjacency_spectral_radius(g300):
    lam = np.linalg.eigvalsh(OperatorView(g300, Kind.NORM_ADJACENCY).materialize_dense())
    assert np.max(np.abs(lam)) <= 1 + 1e-9


def test_dense_limit_guard():
    g = generate(6000, 2, 1)
    with pytest.raises(DenseLimitError):
        OperatorView(g, Kind.LAPLACIAN).materialize_dense(limit=5000)


def test_dense_limit_env(monkeypatch):
    monkeypatch.setenv(DENSE_LIMIT_ENV, "40")
    assert dense_limit() == 40
    with pytest.raises(DenseLimitError):
        OperatorView(generate(50, 2, 0), Kind.ADJACENCY).materialize_dense()
    monkeypatch.setenv(DENSE_LIMIT_ENV, "lots")
    with pytest.raises(DomainError):
        dense_limit()


def test_apply_length_guard(g300):
    with pytest.raises(DomainError):
        OperatorView(g300, Kind.ADJACENCY).apply(np.ones(3))


def test_csv_has_17_digits():
    g = generate(3, 2, 0)
    fh = io.StringIO()
    OperatorView(g, Kind.NORM_ADJACENCY).to_csv(fh)
    rows = [list(map(float, ln.split(","))) for ln in fh.getvalue().splitlines()]
    assert np.array_equal(np.array(rows), OperatorView(g, Kind.NORM_ADJACENCY).materialize_dense())

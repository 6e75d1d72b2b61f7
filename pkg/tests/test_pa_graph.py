import math
import multiprocessing as mp

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from paspec import DomainError, GraphFormatError, deserialize, generate, load, save, serialize
from conftest import dense_adjacency


def test_two_vertex_seed_graph():
    for seed in (0, 1, 99):
        g = generate(2, 3, seed)
        assert g.adjacency(1, 2) == 3
        assert g.degrees.tolist() == [3, 3]


def test_degree_sum_example():
    g = generate(10, 2, 42)
    assert int(g.degrees.sum()) == 36


def test_min_degree_example():
    assert generate(5, 2, 7).degrees.min() >= 2


def test_roundtrip_example():
    g = generate(100, 2, 1)
    assert deserialize(serialize(g)) == g


def test_roundtrip_through_file(tmp_path):
    g = generate(57, 3, 12345)
    path = tmp_path / "g.pa"
    save(g, path)
    assert path.read_text().startswith("#pa n=57 m=3 seed=12345\n")
    assert load(path) == g


def _corrupt(text: str, old: str, new: str) -> str:
    assert old in text
    return text.replace(old, new, 1)


@pytest.fixture
def small_text():
    return serialize(generate(5, 2, 7)).decode()


def test_missing_degree_table(small_text):
    lines = [ln for ln in small_text.splitlines() if not ln.startswith("#degrees")]
    with pytest.raises(GraphFormatError, match="inconsistent graph file"):
        deserialize("\n".join(lines) + "\n")


def test_self_loop_rejected(small_text):
    with pytest.raises(GraphFormatError, match="self-loop forbidden"):
        deserialize(small_text + "5 5 1\n")


@pytest.mark.parametrize(
    "mutate, message",
    [
        (lambda t: t.replace("#pa n=5", "#pa n=x", 1), "header"),
        (lambda t: t + "1 2 1\n", "duplicate|sorted"),
        (lambda t: t + "4 9 1\n", "range"),
        (lambda t: t + "3 4 0\n", "multiplicity"),
    ],
)
def test_malformed_files(small_text, mutate, message):
    with pytest.raises(GraphFormatError, match=message):
        deserialize(mutate(small_text))


def test_degree_table_mismatch(small_text):
    head, deg, *rest = small_text.splitlines()
    vals = deg.split()
    vals[1] = str(int(vals[1]) + 1)
    with pytest.raises(GraphFormatError):
        deserialize("\n".join([head, " ".join(vals), *rest]) + "\n")


def test_parameter_guards():
    with pytest.raises(DomainError):
        generate(1, 2, 0)
    with pytest.raises(DomainError):
        generate(10, 1, 0)
    with pytest.raises(DomainError):
        generate(10, 2, -1)


@settings(max_examples=60, deadline=None)
@given(
    n=st.integers(2, 150),
    m=st.integers(2, 6),
    seed=st.integers(0, 2**64 - 1),
)
def test_generated_invariants(n, m, seed):
    g = generate(n, m, seed)
    a = dense_adjacency(g)
    assert np.array_equal(a, a.T)
    assert np.all(np.diag(a) == 0)
    assert int(g.degrees.sum()) == 2 * m * (n - 1)
    assert g.degrees.min() >= m
    assert np.array_equal(a.sum(axis=1), g.degrees)
    # every vertex born at t >= 2 sends exactly m half-edges to older vertices
    for t in range(3, n + 1):
        assert a[t - 1, : t - 1].sum() == m


def test_bit_identical_regeneration():
    a, b = generate(400, 3, 2024), generate(400, 3, 2024)
    assert a == b
    assert serialize(a) == serialize(b)
    assert generate(400, 3, 2025) != a


def _serialized(args):
    return serialize(generate(*args))


def test_reproducible_in_worker_processes():
    cells = [(300, 2, s) for s in range(4)]
    with mp.get_context("spawn").Pool(2) as pool:
        remote = pool.map(_serialized, cells)
    assert remote == [_serialized(c) for c in cells]


def _within(count: int, trials: int, p: float) -> bool:
    se = math.sqrt(trials * p * (1 - p))
    return abs(count - trials * p) <= 3 * se


def test_endpoint_law_conditional_on_previous_graph():
    """Regenerate G_4 (m=2) 10^5 times and group by G_3.

    Given G_3 each of the two draws of vertex 4 lands on v with probability
    d_3(v) / (2m * 2) = d_3(v) / 8. Vertex 3 at step 3 sees the uniform law on {1, 2}.
    """
    runs = 100_000
    step3 = {1: 0, 2: 0}
    by_class: dict[tuple[int, int], list[int]] = {}
    for seed in range(runs):
        g = generate(4, 2, seed)
        t3 = (g.adjacency(1, 3), g.adjacency(2, 3))
        step3[1] += t3[0]
        step3[2] += t3[1]
        hits = by_class.setdefault(t3, [0, 0, 0, 0])
        hits[0] += 1
        for v in (1, 2, 3):
            hits[v] += g.adjacency(v, 4)
    assert _within(step3[1], 2 * runs, 0.5)
    assert len(by_class) == 3
    for (c1, c2), (count, *hits) in by_class.items():
        d3 = [2 + c1, 2 + c2, 2]
        for v in range(3):
            assert _within(hits[v], 2 * count, d3[v] / 8), ((c1, c2), v, hits, count)

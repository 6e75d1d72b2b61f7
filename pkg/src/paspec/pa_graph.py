"""Barabási–Albert preferential-attachment multigraph.

Vertices are labelled ``1..n`` by birth time. The process starts from two
vertices joined by ``m`` parallel edges; every later vertex ``t`` draws ``m``
endpoints independently, with replacement, each with probability
``d_{t-1}(v) / (2m(t-2))`` computed on the graph *before* step ``t``.

Randomness comes from a single numpy ``PCG64`` stream seeded with the
64-bit ``seed``; the same ``(n, m, seed)`` always yields the same graph.
"""

from __future__ import annotations

import io
import os
import re
from dataclasses import dataclass
from functools import cached_property

import numpy as np
import scipy.sparse as sp

from .errors import DomainError, GraphFormatError

__all__ = [
    "Graph",
    "RNG_NAME",
    "generate",
    "serialize",
    "deserialize",
    "save",
    "load",
]

RNG_NAME = "pcg64"

_MAX_SEED = 2**64
_INT64_MAX = np.iinfo(np.int64).max
_HEADER_RE = re.compile(r"^#pa n=(\d+) m=(\d+) seed=(\d+)$")


@dataclass(frozen=True, eq=False)
class Graph:
    """Immutable PA multigraph.

    ``edges`` holds one row ``(u, v)`` per distinct vertex pair with
    ``u < v`` (1-based), sorted lexicographically; ``mult`` holds the
    matching multiplicities. ``degrees[v - 1]`` is the multi-degree of ``v``.
    """

    n: int
    m: int
    seed: int
    edges: np.ndarray
    mult: np.ndarray
    degrees: np.ndarray

    def __post_init__(self) -> None:
        for arr in (self.edges, self.mult, self.degrees):
            arr.setflags(write=False)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Graph):
            return NotImplemented
        return (
            (self.n, self.m, self.seed) == (other.n, other.m, other.seed)
            and np.array_equal(self.edges, other.edges)
            and np.array_equal(self.mult, other.mult)
            and np.array_equal(self.degrees, other.degrees)
        )

    __hash__ = None  # type: ignore[assignment]

    def __repr__(self) -> str:
        return (
            f"Graph(n={self.n}, m={self.m}, seed={self.seed}, "
            f"distinct_edges={len(self.mult)}, edges={self.num_edges})"
        )

    @property
    def num_edges(self) -> int:
        """Number of edges counted with multiplicity."""
        return int(self.mult.sum())

    @cached_property
    def csr(self) -> sp.csr_matrix:
        """Symmetric 0-based adjacency with multiplicities (zero diagonal)."""
        u = self.edges[:, 0] - 1
        v = self.edges[:, 1] - 1
        rows = np.concatenate([u, v])
        cols = np.concatenate([v, u])
        data = np.concatenate([self.mult, self.mult]).astype(np.float64)
        a = sp.csr_matrix((data, (rows, cols)), shape=(self.n, self.n))
        a.sort_indices()
        return a

    @cached_property
    def _pairs(self) -> dict[tuple[int, int], int]:
        return {
            (int(u), int(v)): int(c)
            for (u, v), c in zip(self.edges.tolist(), self.mult.tolist())
        }

    def check_vertex(self, v: int) -> None:
        if not 1 <= v <= self.n:
            raise DomainError(f"vertex {v} out of range 1..{self.n}")

    def adjacency(self, u: int, v: int) -> int:
        """Edge multiplicity between ``u`` and ``v`` (0 on the diagonal)."""
        self.check_vertex(u)
        self.check_vertex(v)
        if u == v:
            return 0
        if u > v:
            u, v = v, u
        return self._pairs.get((u, v), 0)

    def degree(self, v: int) -> int:
        self.check_vertex(v)
        return int(self.degrees[v - 1])

    def neighbors(self, v: int) -> dict[int, int]:
        """Map ``neighbor -> multiplicity`` for vertex ``v`` (1-based)."""
        self.check_vertex(v)
        a = self.csr
        lo, hi = a.indptr[v - 1], a.indptr[v]
        return {int(w) + 1: int(c) for w, c in zip(a.indices[lo:hi], a.data[lo:hi])}


def _check_params(n: int, m: int) -> None:
    if isinstance(n, bool) or not isinstance(n, (int, np.integer)) or n < 2:
        raise DomainError(f"n must be an integer >= 2, got {n!r}")
    if isinstance(m, bool) or not isinstance(m, (int, np.integer)) or m < 2:
        raise DomainError(f"m must be an integer >= 2, got {m!r}")
    # total half-edge count 2m(n-1) must fit in int64
    if 2 * int(m) * (int(n) - 1) > _INT64_MAX:
        raise DomainError("edge count overflows 64-bit integers")


def _check_seed(seed: int) -> None:
    if isinstance(seed, bool) or not isinstance(seed, (int, np.integer)):
        raise DomainError(f"seed must be an integer, got {seed!r}")
    if not 0 <= seed < _MAX_SEED:
        raise DomainError(f"seed must lie in [0, 2**64), got {seed}")


def _build(n: int, m: int, seed: int, lo: np.ndarray, hi: np.ndarray) -> Graph:
    """Aggregate 0-based endpoint pairs (lo < hi) into a Graph."""
    keys = lo.astype(np.int64) * n + hi
    uniq, counts = np.unique(keys, return_counts=True)
    edges = np.column_stack([uniq // n + 1, uniq % n + 1]).astype(np.int64)
    mult = counts.astype(np.int64)
    degrees = np.bincount(edges[:, 0] - 1, weights=mult, minlength=n)
    degrees += np.bincount(edges[:, 1] - 1, weights=mult, minlength=n)
    return Graph(int(n), int(m), int(seed), edges, mult, degrees.astype(np.int64))


def generate(n: int, m: int, seed: int) -> Graph:
    """Grow the PA multigraph ``G_n`` with ``m`` edges per new vertex.

    Endpoints are drawn uniformly from a flat half-edge array in which every
    vertex appears once per unit of degree. The half-edges created at step
    ``t`` are appended only after all ``m`` draws of that step, so each draw
    sees the degrees of ``G_{t-1}``.
    """
    _check_params(n, m)
    _check_seed(seed)
    n, m, seed = int(n), int(m), int(seed)
    rng = np.random.Generator(np.random.PCG64(seed))

    half = np.empty(2 * m * (n - 1), dtype=np.int64)
    half[:m] = 0
    half[m : 2 * m] = 1
    targets = np.empty((n, m), dtype=np.int64)
    targets[0] = -1
    targets[1] = 0

    if n > 2:
        steps = np.arange(2, n, dtype=np.int64)
        # pool size before adding 0-based vertex t is 2m(t-1)
        picks = rng.integers(0, (2 * m * (steps - 1))[:, None], size=(n - 2, m))
        pos = 2 * m
        for i, t in enumerate(range(2, n)):
            chosen = half[picks[i]]
            targets[t] = chosen
            half[pos : pos + m] = chosen
            half[pos + m : pos + 2 * m] = t
            pos += 2 * m

    newcomers = np.repeat(np.arange(1, n, dtype=np.int64), m)
    return _build(n, m, seed, targets[1:].ravel(), newcomers)


def serialize(graph: Graph) -> bytes:
    """Encode ``graph`` in the text graph-file format."""
    buf = io.StringIO()
    buf.write(f"#pa n={graph.n} m={graph.m} seed={graph.seed}\n")
    buf.write("#degrees " + " ".join(map(str, graph.degrees.tolist())) + "\n")
    for (u, v), c in zip(graph.edges.tolist(), graph.mult.tolist()):
        buf.write(f"{u} {v} {c}\n")
    return buf.getvalue().encode("ascii")


def deserialize(data: bytes | str) -> Graph:
    """Parse and validate a graph file; degrees are recomputed and cross-checked."""
    text = data.decode("ascii") if isinstance(data, (bytes, bytearray)) else data
    lines = text.splitlines()
    if not lines:
        raise GraphFormatError("malformed header: empty stream")
    match = _HEADER_RE.match(lines[0].strip())
    if match is None:
        raise GraphFormatError(f"malformed header: {lines[0][:80]!r}")
    n, m, seed = (int(g) for g in match.groups())
    try:
        _check_params(n, m)
        _check_seed(seed)
    except DomainError as exc:
        raise GraphFormatError(f"malformed header: {exc}") from None

    table: np.ndarray | None = None
    body_start = 1
    if len(lines) > 1 and lines[1].startswith("#degrees"):
        try:
            table = np.array([int(x) for x in lines[1].split()[1:]], dtype=np.int64)
        except ValueError:
            raise GraphFormatError("inconsistent graph file: unreadable degree table") from None
        body_start = 2
    if table is None:
        raise GraphFormatError("inconsistent graph file: missing degree table")
    if len(table) != n:
        raise GraphFormatError(
            f"inconsistent graph file: degree table has {len(table)} entries, expected {n}"
        )

    rows: list[tuple[int, int, int]] = []
    for lineno, line in enumerate(lines[body_start:], start=body_start + 1):
        line = line.strip()
        if not line:
            continue
        if line.startswith("#"):
            raise GraphFormatError(f"line {lineno}: unexpected header line")
        parts = line.split()
        if len(parts) != 3:
            raise GraphFormatError(f"line {lineno}: expected 'u v mult'")
        try:
            u, v, c = (int(p) for p in parts)
        except ValueError:
            raise GraphFormatError(f"line {lineno}: non-integer field") from None
        if u == v:
            raise GraphFormatError(f"line {lineno}: self-loop forbidden ({u} {u})")
        if not (1 <= u <= n and 1 <= v <= n):
            raise GraphFormatError(f"line {lineno}: vertex out of range 1..{n}")
        if u > v:
            raise GraphFormatError(f"line {lineno}: edge record must have u < v")
        if c < 1:
            raise GraphFormatError(f"line {lineno}: multiplicity must be >= 1")
        rows.append((u, v, c))

    if rows:
        arr = np.array(rows, dtype=np.int64)
    else:
        arr = np.zeros((0, 3), dtype=np.int64)
    keys = arr[:, 0] * (n + 1) + arr[:, 1]
    if len(np.unique(keys)) != len(keys):
        sorted_keys = np.sort(keys)
        dup = sorted_keys[np.flatnonzero(np.diff(sorted_keys) == 0)[0]]
        raise GraphFormatError(
            f"duplicate edge record ({dup // (n + 1)}, {dup % (n + 1)})"
        )
    if np.any(np.diff(keys) < 0):
        raise GraphFormatError("edge records are not sorted lexicographically")

    edges = arr[:, :2].copy()
    mult = arr[:, 2].copy()
    degrees = np.bincount(edges[:, 0] - 1, weights=mult, minlength=n)
    degrees += np.bincount(edges[:, 1] - 1, weights=mult, minlength=n)
    degrees = degrees.astype(np.int64)
    if not np.array_equal(degrees, table):
        raise GraphFormatError("inconsistent graph file: degree table does not match edge list")
    if int(degrees.sum()) != 2 * m * (n - 1):
        raise GraphFormatError(
            f"inconsistent graph file: degree sum {int(degrees.sum())} != 2m(n-1)"
        )
    if int(degrees.min()) < m:
        raise GraphFormatError("inconsistent graph file: a vertex has degree < m")
    return Graph(n, m, seed, edges, mult, degrees)


def save(graph: Graph, path: str | os.PathLike) -> None:
    with open(path, "wb") as fh:
        fh.write(serialize(graph))


def load(path: str | os.PathLike) -> Graph:
    with open(path, "rb") as fh:
        return deserialize(fh.read())

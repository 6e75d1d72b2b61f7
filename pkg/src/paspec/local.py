"""Decorated rooted balls and local random-walk functionals.

A decorated ball of radius ``r`` around ``u`` is the sub-multigraph induced
by vertices within distance ``r`` of ``u``, with every vertex carrying its
*full-graph* degree as a mark. Inside such a ball of radius ``k`` the walk
kernel ``p(x -> y) = mult(x, y) / mark(x)`` reproduces the ``k``-step return
probability of the walk on the whole graph.

Two evaluation engines are provided for local averages:

``"ball"``
    extracts every ball and runs the forward probability-vector recursion
    inside it (the reference path).
``"sweep"``
    runs the same recursion from all roots at once on the full graph, in
    column blocks of ``W = D^-1/2 A D^-1/2``; mass started at a root never
    leaves its radius-``k`` ball in ``k`` steps, so the values coincide.
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np
import scipy.sparse as sp

from .errors import DomainError, GraphFormatError
from .operators import norm_adjacency
from .pa_graph import Graph

RETURN_PROB = "return_prob"
ENGINES = ("auto", "ball", "sweep")
# "auto" switches to the sweep engine above this size
BALL_ENGINE_MAX_N = 400
_SWEEP_BLOCK_ENTRIES = 1 << 22


@dataclass(frozen=True)
class RootedBall:
    """Induced rooted ball without degree marks.

    Vertices are listed in canonical order (BFS layer, then original id), so
    the root always has local index 0. ``edges`` maps local pairs ``(i, j)``
    with ``i < j`` to multiplicities.
    """

    ids: tuple[int, ...]
    layers: tuple[int, ...]
    edges: dict[tuple[int, int], int]
    radius: int

    @property
    def root(self) -> int:
        return 0

    def __len__(self) -> int:
        return len(self.ids)

    def internal_degrees(self) -> np.ndarray:
        deg = np.zeros(len(self.ids), dtype=np.int64)
        for (i, j), c in self.edges.items():
            deg[i] += c
            deg[j] += c
        return deg

    @cached_property
    def _adjacency(self) -> sp.csr_matrix:
        size = len(self.ids)
        if not self.edges:
            return sp.csr_matrix((size, size))
        pairs = np.array(list(self.edges.keys()), dtype=np.int64)
        mult = np.array(list(self.edges.values()), dtype=np.float64)
        rows = np.concatenate([pairs[:, 0], pairs[:, 1]])
        cols = np.concatenate([pairs[:, 1], pairs[:, 0]])
        return sp.csr_matrix((np.concatenate([mult, mult]), (rows, cols)), shape=(size, size))


@dataclass(frozen=True)
class DecoratedBall(RootedBall):
    marks: tuple[int, ...]

    @property
    def vertices(self) -> list[tuple[int, int]]:
        """``(original id, full degree)`` pairs in canonical order."""
        return list(zip(self.ids, self.marks))


@dataclass(frozen=True)
class LocalFunctionalSpec:
    k: int
    K: int | None = None
    kind: str = RETURN_PROB

    def __post_init__(self) -> None:
        if self.kind != RETURN_PROB:
            raise DomainError(f"unsupported local functional {self.kind!r}")
        if isinstance(self.k, bool) or not isinstance(self.k, (int, np.integer)) or self.k < 0:
            raise DomainError(f"k must be a nonnegative integer, got {self.k!r}")
        if self.K is not None and (isinstance(self.K, bool) or not isinstance(self.K, (int, np.integer))):
            raise DomainError(f"K must be an integer, got {self.K!r}")

    def validate_for(self, graph: Graph) -> None:
        if self.K is not None and self.K < graph.m:
            raise DomainError(f"truncation K={self.K} must be >= m={graph.m}")


def _bfs_layers(graph: Graph, u: int, r: int) -> list[np.ndarray]:
    a = graph.csr
    seen = np.zeros(graph.n, dtype=bool)
    frontier = np.array([u - 1], dtype=np.int64)
    seen[frontier] = True
    layers = [frontier]
    for _ in range(r):
        starts, stops = a.indptr[frontier], a.indptr[frontier + 1]
        nbrs = np.concatenate([a.indices[s:e] for s, e in zip(starts, stops)])
        nbrs = np.unique(nbrs)
        nbrs = nbrs[~seen[nbrs]]
        if nbrs.size == 0:
            break
        seen[nbrs] = True
        layers.append(nbrs)
        frontier = nbrs
    return layers


def _rooted(graph: Graph, u: int, r: int) -> tuple[np.ndarray, RootedBall]:
    graph.check_vertex(u)
    if isinstance(r, bool) or not isinstance(r, (int, np.integer)) or r < 0:
        raise DomainError(f"radius must be a nonnegative integer, got {r!r}")
    layers = _bfs_layers(graph, u, int(r))
    order = np.concatenate(layers)
    dist = np.concatenate([np.full(len(layer), d, dtype=np.int64) for d, layer in enumerate(layers)])
    sub = graph.csr[order][:, order].tocoo()
    keep = sub.row < sub.col
    edges = {
        (int(i), int(j)): int(c)
        for i, j, c in zip(sub.row[keep], sub.col[keep], sub.data[keep])
    }
    edges = dict(sorted(edges.items()))
    ball = RootedBall(tuple(int(x) + 1 for x in order), tuple(dist.tolist()), edges, int(r))
    return order, ball


def raw_ball(graph: Graph, u: int, r: int) -> RootedBall:
    """Undecorated induced ball of radius ``r`` around ``u``."""
    return _rooted(graph, u, r)[1]


def extract_ball(graph: Graph, u: int, r: int) -> DecoratedBall:
    """Decorated rooted ball of radius ``r`` around vertex ``u`` (1-based)."""
    order, ball = _rooted(graph, u, r)
    marks = tuple(int(d) for d in graph.degrees[order])
    return DecoratedBall(ball.ids, ball.layers, ball.edges, ball.radius, marks)


def decorate_from_raw(raw: RootedBall, r: int) -> DecoratedBall:
    """Recover the decorated radius-``r`` ball from a raw radius-``r+1`` ball.

    Every vertex within distance ``r`` has all of its neighbours inside the
    raw ball, so its internal degree there is its full degree.
    """
    if raw.radius < r + 1:
        raise DomainError(f"need a raw ball of radius >= {r + 1}, got {raw.radius}")
    internal = raw.internal_degrees()
    keep = [i for i, d in enumerate(raw.layers) if d <= r]
    local = {old: new for new, old in enumerate(keep)}
    edges = {
        (local[i], local[j]): c
        for (i, j), c in raw.edges.items()
        if i in local and j in local
    }
    return DecoratedBall(
        tuple(raw.ids[i] for i in keep),
        tuple(raw.layers[i] for i in keep),
        edges,
        r,
        tuple(int(internal[i]) for i in keep),
    )


def max_ball_degree(ball: DecoratedBall) -> int:
    return max(ball.marks)


def return_probability(ball: DecoratedBall, k: int) -> float:
    """``k``-step return probability to the root, computed inside the ball."""
    if k < 0:
        raise DomainError(f"k must be >= 0, got {k}")
    if ball.radius < k:
        raise DomainError(
            f"ball radius {ball.radius} < k={k}: return probability is not local at this radius"
        )
    if k == 0:
        return 1.0
    marks = np.asarray(ball.marks, dtype=np.float64)
    kernel = sp.diags(1.0 / marks) @ ball._adjacency
    step = kernel.T.tocsr()
    p = np.zeros(len(ball.ids))
    p[0] = 1.0
    for _ in range(k):
        p = step @ p
    return float(p[0])


def ball_max_degrees(graph: Graph, r: int) -> np.ndarray:
    """Per-vertex maximum full degree over the radius-``r`` ball (0-based array).

    Uses ``B_r(u) = {u} ∪ ⋃_{v ~ u} B_{r-1}(v)``.
    """
    a = graph.csr
    best = graph.degrees.astype(np.int64).copy()
    for _ in range(r):
        best = np.maximum(best, np.maximum.reduceat(best[a.indices], a.indptr[:-1]))
    return best


def sweep_return_probabilities(graph: Graph, k_max: int, block: int | None = None) -> np.ndarray:
    """Array ``R`` of shape ``(k_max + 1, n)`` with ``R[k, u-1] = (P^k)_{uu}``.

    For symmetric ``W`` and ``x = W^j e_u``: ``(W^{2j})_{uu} = <x, x>`` and
    ``(W^{2j+1})_{uu} = <x, W x>``, so ``k_max / 2`` block products suffice.
    """
    if k_max < 0:
        raise DomainError(f"k_max must be >= 0, got {k_max}")
    n = graph.n
    out = np.empty((k_max + 1, n))
    out[0] = 1.0
    if k_max == 0:
        return out
    w = norm_adjacency(graph)
    if block is None:
        block = max(1, min(n, _SWEEP_BLOCK_ENTRIES // n))
    for start in range(0, n, block):
        stop = min(n, start + block)
        width = stop - start
        x = np.zeros((n, width))
        x[np.arange(start, stop), np.arange(width)] = 1.0
        j = 0
        while True:
            if 2 * j <= k_max and j > 0:
                out[2 * j, start:stop] = np.einsum("ij,ij->j", x, x)
            if 2 * j + 1 > k_max:
                break
            y = w @ x
            out[2 * j + 1, start:stop] = np.einsum("ij,ij->j", x, y)
            x = y
            j += 1
    return out


def _resolve_engine(graph: Graph, engine: str) -> str:
    if engine not in ENGINES:
        raise DomainError(f"unknown engine {engine!r}; choose from {ENGINES}")
    if engine == "auto":
        return "ball" if graph.n <= BALL_ENGINE_MAX_N else "sweep"
    return engine


def local_values(graph: Graph, spec: LocalFunctionalSpec, engine: str = "auto") -> np.ndarray:
    """Per-root values ``f(B_k(G, u))`` for ``u = 1..n`` (0-based array)."""
    spec.validate_for(graph)
    engine = _resolve_engine(graph, engine)
    k = spec.k
    if engine == "ball":
        values = np.empty(graph.n)
        for u in range(1, graph.n + 1):
            ball = extract_ball(graph, u, k)
            if spec.K is not None and max_ball_degree(ball) > spec.K:
                values[u - 1] = 0.0
            else:
                values[u - 1] = return_probability(ball, k)
        return values
    values = sweep_return_probabilities(graph, k)[k].copy()
    if spec.K is not None:
        values[ball_max_degrees(graph, k) > spec.K] = 0.0
    return values


def local_average(graph: Graph, spec: LocalFunctionalSpec, engine: str = "auto") -> float:
    """Empirical average ``(1/n) Σ_u f(B_k(G, u))``, summed in vertex order."""
    values = local_values(graph, spec, engine)
    return math.fsum(values.tolist()) / graph.n


def dump_ball(ball: DecoratedBall) -> str:
    buf = io.StringIO()
    buf.write(f"#ball root={ball.ids[0]} r={ball.radius}\n")
    for vid, mark in ball.vertices:
        buf.write(f"v {vid} {mark}\n")
    for (i, j), c in ball.edges.items():
        buf.write(f"e {ball.ids[i]} {ball.ids[j]} {c}\n")
    return buf.getvalue()


def parse_ball(text: str) -> DecoratedBall:
    """Inverse of :func:`dump_ball`; layers are recomputed by BFS from the root."""
    lines = [ln.strip() for ln in text.splitlines() if ln.strip() and not ln.startswith("# ")]
    if not lines or not lines[0].startswith("#ball "):
        raise GraphFormatError("malformed ball header")
    try:
        fields = dict(tok.split("=", 1) for tok in lines[0].split()[1:])
        root, radius = int(fields["root"]), int(fields["r"])
    except (KeyError, ValueError):
        raise GraphFormatError("malformed ball header") from None
    ids: list[int] = []
    marks: list[int] = []
    raw_edges: list[tuple[int, int, int]] = []
    for ln in lines[1:]:
        parts = ln.split()
        if parts[0] == "v" and len(parts) == 3:
            ids.append(int(parts[1]))
            marks.append(int(parts[2]))
        elif parts[0] == "e" and len(parts) == 4:
            raw_edges.append((int(parts[1]), int(parts[2]), int(parts[3])))
        else:
            raise GraphFormatError(f"malformed ball line {ln!r}")
    if not ids or ids[0] != root:
        raise GraphFormatError("first vertex line must be the root")
    local = {vid: i for i, vid in enumerate(ids)}
    edges: dict[tuple[int, int], int] = {}
    adj: dict[int, list[int]] = {i: [] for i in range(len(ids))}
    for a, b, c in raw_edges:
        i, j = sorted((local[a], local[b]))
        edges[(i, j)] = c
        adj[i].append(j)
        adj[j].append(i)
    dist = {0: 0}
    queue = [0]
    for x in queue:
        for y in adj[x]:
            if y not in dist:
                dist[y] = dist[x] + 1
                queue.append(y)
    if len(dist) != len(ids):
        raise GraphFormatError("ball is not connected to its root")
    layers = tuple(dist[i] for i in range(len(ids)))
    return DecoratedBall(tuple(ids), layers, dict(sorted(edges.items())), radius, tuple(marks))

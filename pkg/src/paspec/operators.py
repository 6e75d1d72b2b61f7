"""Graph operators: adjacency ``A``, walk kernel ``P = D^-1 A``, normalized
adjacency ``W = D^-1/2 A D^-1/2`` and Laplacian ``L = I - W``.

Views are thin read-only adapters over an immutable :class:`Graph`. Entry
access and matrix-vector products work on the sparse edge structure; dense
matrices are only built on request and only up to a size limit.
"""

from __future__ import annotations

import enum
import os
from dataclasses import dataclass
from functools import cached_property
from typing import TextIO

import numpy as np
import scipy.sparse as sp

from .errors import DenseLimitError, DomainError, GraphFormatError
from .pa_graph import Graph

DEFAULT_DENSE_LIMIT = 5000
DENSE_LIMIT_ENV = "PASPEC_DENSE_LIMIT"


class Kind(str, enum.Enum):
    ADJACENCY = "adjacency"
    WALK_KERNEL = "walk_kernel"
    NORM_ADJACENCY = "norm_adjacency"
    LAPLACIAN = "laplacian"


def dense_limit() -> int:
    """Largest ``n`` for dense work; overridable through ``PASPEC_DENSE_LIMIT``."""
    raw = os.environ.get(DENSE_LIMIT_ENV)
    if raw is None:
        return DEFAULT_DENSE_LIMIT
    try:
        value = int(raw)
    except ValueError:
        raise DomainError(f"{DENSE_LIMIT_ENV} must be an integer, got {raw!r}") from None
    if value < 2:
        raise DomainError(f"{DENSE_LIMIT_ENV} must be >= 2")
    return value


def check_dense(n: int, limit: int | None = None) -> None:
    limit = dense_limit() if limit is None else limit
    if n > limit:
        raise DenseLimitError(f"n={n} exceeds dense limit {limit}")


@dataclass(frozen=True)
class OperatorView:
    graph: Graph
    kind: Kind

    def __post_init__(self) -> None:
        object.__setattr__(self, "kind", Kind(self.kind))
        if self.graph.n and int(self.graph.degrees.min()) <= 0:
            raise GraphFormatError("operator view needs strictly positive degrees")

    @property
    def n(self) -> int:
        return self.graph.n

    @cached_property
    def sparse(self) -> sp.csr_matrix:
        """The operator as a CSR matrix (0-based)."""
        return sparse_operator(self.graph, self.kind)

    def entry(self, u: int, v: int) -> float:
        """Entry ``(u, v)`` with 1-based vertex labels."""
        g = self.graph
        g.check_vertex(u)
        g.check_vertex(v)
        a = g.adjacency(u, v)
        if self.kind is Kind.ADJACENCY:
            return float(a)
        if self.kind is Kind.WALK_KERNEL:
            return a / g.degree(u)
        w = a / np.sqrt(g.degree(u) * g.degree(v))
        if self.kind is Kind.NORM_ADJACENCY:
            return float(w)
        return (1.0 if u == v else 0.0) - float(w)

    def apply(self, x) -> np.ndarray:
        x = np.asarray(x)
        if x.shape != (self.n,):
            raise DomainError(f"vector has shape {x.shape}, expected ({self.n},)")
        return self.sparse @ x

    def materialize_dense(self, limit: int | None = None) -> np.ndarray:
        check_dense(self.n, limit)
        return self.sparse.toarray()

    def to_csv(self, fh: TextIO, limit: int | None = None) -> None:
        """Write the dense matrix row-major with 17 significant digits."""
        dense = self.materialize_dense(limit)
        for row in dense:
            fh.write(",".join(f"{x:.17g}" for x in row) + "\n")


def sparse_operator(graph: Graph, kind: Kind | str) -> sp.csr_matrix:
    kind = Kind(kind)
    a = graph.csr
    if kind is Kind.ADJACENCY:
        return a.copy()
    d = graph.degrees.astype(np.float64)
    rows = np.repeat(np.arange(graph.n), np.diff(a.indptr))
    cols = a.indices
    if kind is Kind.WALK_KERNEL:
        data = a.data / d[rows]
    else:
        isd = 1.0 / np.sqrt(d)
        data = a.data * isd[rows] * isd[cols]
    op = sp.csr_matrix((data, cols.copy(), a.indptr.copy()), shape=a.shape)
    if kind is Kind.LAPLACIAN:
        op = (sp.identity(graph.n, format="csr") - op).tocsr()
        op.sort_indices()
    return op


def norm_adjacency(graph: Graph) -> sp.csr_matrix:
    return sparse_operator(graph, Kind.NORM_ADJACENCY)

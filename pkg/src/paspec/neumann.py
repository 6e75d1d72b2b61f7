"""Truncated Neumann expansion of the Stieltjes transform.

On ``D = {z : Im z > 0, |1 - z| > 1}`` the resolvent factors as
``(L - z)^-1 = (1 - z)^-1 (I - W / (1 - z))^-1`` with ``||W|| <= 1``, so

    m_n(z) = (1 - z)^-1 Σ_{k<K} (1 - z)^-k (1/n) Tr W^k  +  err,
    |err| <= |1 - z|^-K / (|1 - z| - 1).

The bound does not depend on ``n``. Trace moments are ``z``-independent and
are computed once per graph.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import partial
from typing import Sequence, TextIO

import numpy as np

from ._parallel import pmap
from .errors import DomainError
from .pa_graph import Graph, generate
from .spectral import Method, StieltjesEval, moment_traces

DEFAULT_Z_GRID = (1 + 1.25j, 1 + 1.5j, 1 + 2j, 1 + 3j, 3 + 1j, -1 + 1j)


def in_domain(z: complex) -> bool:
    z = complex(z)
    return z.imag > 0 and abs(1 - z) > 1


def _check_domain(z: complex) -> complex:
    z = complex(z)
    if not in_domain(z):
        raise DomainError("z outside Neumann domain |1-z|>1")
    return z


def _check_K(K: int) -> int:
    if isinstance(K, bool) or not isinstance(K, (int, np.integer)) or K < 1:
        raise DomainError(f"K must be an integer >= 1, got {K!r}")
    return int(K)


def tail_bound(z: complex, K: int) -> float:
    """Uniform truncation bound ``|1 - z|^-K / (|1 - z| - 1)``."""
    z = _check_domain(z)
    K = _check_K(K)
    rho = abs(1 - z)
    return rho ** (-K) / (rho - 1)


def required_K(z: complex, eps: float) -> int:
    """Smallest ``K >= 1`` with ``tail_bound(z, K) <= eps``."""
    z = _check_domain(z)
    if not eps > 0:
        raise DomainError(f"eps must be positive, got {eps}")
    rho = abs(1 - z)
    guess = math.ceil(-math.log(eps * (rho - 1)) / math.log(rho))
    K = max(1, guess)
    # settle float rounding at the boundary
    while K > 1 and tail_bound(z, K - 1) <= eps:
        K -= 1
    while tail_bound(z, K) > eps:
        K += 1
    return K


@dataclass(frozen=True)
class NeumannConfig:
    """A point of ``D``, a truncation level and the trace moments ``k < K``."""

    z: complex
    K: int
    traces: tuple[float, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "z", _check_domain(self.z))
        _check_K(self.K)
        if len(self.traces) < self.K:
            raise DomainError(f"need {self.K} trace moments, got {len(self.traces)}")
        if self.traces[0] != 1.0:
            raise DomainError("trace moment k=0 must equal 1")
        if self.K > 1 and self.traces[1] != 0.0:
            raise DomainError("trace moment k=1 must equal 0")
        if any(abs(t) > 1 + 1e-12 for t in self.traces):
            raise DomainError("trace moments must lie in [-1, 1]")

    def partial_sum(self) -> complex:
        w = 1.0 / (1.0 - self.z)
        terms = [w ** (k + 1) * self.traces[k] for k in range(self.K)]
        return complex(math.fsum(t.real for t in terms), math.fsum(t.imag for t in terms))

    def tail_bound(self) -> float:
        return tail_bound(self.z, self.K)


def stieltjes_neumann(
    graph: Graph,
    z: complex,
    K: int,
    traces: Sequence[float] | None = None,
    engine: str = "auto",
) -> StieltjesEval:
    """Truncated series value of ``m_n(z)`` with its guaranteed error bound.

    Pass ``traces`` (moments ``0..K-1`` or more) to reuse them across ``z``.
    """
    z = _check_domain(z)
    K = _check_K(K)
    if traces is None:
        traces = moment_traces(graph, K - 1, engine=engine)
    cfg = NeumannConfig(z, K, tuple(float(t) for t in traces[:K]))
    return StieltjesEval(z, cfg.partial_sum(), Method.NEUMANN, K, cfg.tail_bound())


@dataclass(frozen=True)
class LimitRow:
    n: int
    z: complex
    K: int
    mean: complex
    stderr: complex
    n_seeds: int
    tail_bound: float


@dataclass(frozen=True)
class LimitEstimate:
    rows: tuple[LimitRow, ...]

    @property
    def value(self) -> complex:
        return max(self.rows, key=lambda r: r.n).mean

    @property
    def stderr(self) -> complex:
        return max(self.rows, key=lambda r: r.n).stderr


def _cell_moments(cell: tuple[int, int, int, int], engine: str) -> np.ndarray:
    n, m, seed, k_max = cell
    return moment_traces(generate(n, m, seed), k_max, engine=engine)


def _mean_stderr(values: np.ndarray) -> tuple[complex, complex]:
    mean = complex(math.fsum(values.real.tolist()), math.fsum(values.imag.tolist())) / len(values)
    if len(values) < 2:
        return mean, 0j
    scale = math.sqrt(len(values))
    se = complex(np.std(values.real, ddof=1) / scale, np.std(values.imag, ddof=1) / scale)
    return mean, se


def limit_estimate(
    m: int,
    z: complex,
    n_list: Sequence[int],
    seeds: Sequence[int],
    K: int,
    engine: str = "auto",
    jobs: int = 1,
) -> LimitEstimate:
    """Seed-ensemble mean and standard error of the truncated series per size.

    The finite-``n`` ensemble mean of the trace moments stands in for the
    expected root return probabilities of the limit graph; the row with the
    largest ``n`` is the estimate of the limiting transform.
    """
    z = _check_domain(z)
    K = _check_K(K)
    if not n_list or not seeds:
        raise DomainError("limit_estimate needs nonempty size and seed lists")
    cells = [(int(n), int(m), int(s), K - 1) for n in n_list for s in seeds]
    moments = pmap(partial(_cell_moments, engine=engine), cells, jobs)
    rows = []
    bound = tail_bound(z, K)
    for i, n in enumerate(n_list):
        chunk = moments[i * len(seeds) : (i + 1) * len(seeds)]
        vals = np.array([NeumannConfig(z, K, tuple(t.tolist())).partial_sum() for t in chunk])
        mean, se = _mean_stderr(vals)
        rows.append(LimitRow(int(n), z, K, mean, se, len(seeds), bound))
    return LimitEstimate(tuple(rows))


def write_limit_csv(fh: TextIO, est: LimitEstimate) -> None:
    fh.write("n,re_z,im_z,K,mean_re,mean_im,stderr_re,stderr_im,n_seeds,tail_bound\n")
    for r in est.rows:
        fh.write(
            f"{r.n},{r.z.real:.17g},{r.z.imag:.17g},{r.K},{r.mean.real:.17g},{r.mean.imag:.17g},"
            f"{r.stderr.real:.17g},{r.stderr.imag:.17g},{r.n_seeds},{r.tail_bound:.17g}\n"
        )

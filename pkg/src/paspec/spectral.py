"""Spectrum of the normalized Laplacian, its empirical distribution and
Stieltjes transform ``m_n(z) = (1/n) Tr (L - z)^-1``.
"""

from __future__ import annotations

import enum
import math
import warnings
from dataclasses import dataclass, field
from typing import Iterable, Sequence, TextIO

import numpy as np
import scipy.linalg as la

from .errors import DomainError, NumericalError
from .local import (
    LocalFunctionalSpec,
    _resolve_engine,
    local_average,
    sweep_return_probabilities,
)
from .operators import Kind, OperatorView, check_dense
from .pa_graph import Graph

SPECTRUM_TOL = 1e-9
DEFAULT_BINS = 100
VERIFY_MAX_N = 2000


class Method(str, enum.Enum):
    DIRECT_EIG = "direct_eig"
    DIRECT_SOLVE = "direct_solve"
    NEUMANN = "neumann"


@dataclass(frozen=True, eq=False)
class SpectrumResult:
    """Ascending eigenvalues of ``L_n`` with graph provenance.

    ``seed`` is a tuple when the result pools several graphs.
    """

    eigenvalues: np.ndarray
    n: int
    m: int
    seed: int | tuple[int, ...]
    tol: float = SPECTRUM_TOL

    def __post_init__(self) -> None:
        self.eigenvalues.setflags(write=False)

    def __len__(self) -> int:
        return len(self.eigenvalues)

    def cdf(self, x) -> np.ndarray:
        return np.searchsorted(self.eigenvalues, x, side="right") / len(self.eigenvalues)

    def histogram(self, bins: int = DEFAULT_BINS) -> tuple[np.ndarray, np.ndarray]:
        """Bin edges over ``[0, 2]`` and the ESD mass in each bin."""
        if bins < 1:
            raise DomainError(f"bins must be >= 1, got {bins}")
        counts, edges = np.histogram(self.eigenvalues, bins=bins, range=(0.0, 2.0))
        return edges, counts / len(self.eigenvalues)


@dataclass(frozen=True)
class StieltjesEval:
    z: complex
    value: complex
    method: Method
    K: int | None = None
    tail_bound: float | None = None
    extra: dict = field(default_factory=dict, compare=False)


def check_upper(z: complex) -> complex:
    z = complex(z)
    if not z.imag > 0:
        raise DomainError("Im z must be positive")
    return z


def laplacian_dense(graph: Graph) -> np.ndarray:
    return OperatorView(graph, Kind.LAPLACIAN).materialize_dense()


def _residual_spot_check(lap: np.ndarray, lam: np.ndarray, degrees: np.ndarray) -> None:
    scale = 2.0  # ||L|| <= 2
    zero_mode = np.sqrt(degrees.astype(np.float64))
    zero_mode /= np.linalg.norm(zero_mode)
    if np.linalg.norm(lap @ zero_mode) > SPECTRUM_TOL * scale:
        raise NumericalError("sqrt(d) is not a zero mode of L")
    n = len(lam)
    rng = np.random.Generator(np.random.PCG64(n))
    for idx in sorted({n - 1, n // 2}):
        # one step of shifted inverse iteration recovers the eigenvector
        shift = lam[idx] + 1e-10
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", la.LinAlgWarning)
            v = la.solve(lap - shift * np.eye(n), rng.standard_normal(n), assume_a="sym")
            v /= np.linalg.norm(v)
            v = la.solve(lap - shift * np.eye(n), v, assume_a="sym")
        v /= np.linalg.norm(v)
        if np.linalg.norm(lap @ v - lam[idx] * v) > SPECTRUM_TOL * scale:
            raise NumericalError(f"eigenpair residual check failed at index {idx}")


def eigenvalues(graph: Graph, verify: bool | None = None) -> SpectrumResult:
    """All eigenvalues of the dense normalized Laplacian, ascending.

    Eigenvalues are checked against ``[-tol, 2 + tol]`` and then clamped to
    ``[0, 2]``. With ``verify`` the zero mode ``sqrt(d)`` and two further
    eigenpairs are residual-checked; by default only for ``n <= 2000``,
    where the extra solves are cheap next to the eigensolve.
    """
    if verify is None:
        verify = graph.n <= VERIFY_MAX_N
    check_dense(graph.n)
    lap = laplacian_dense(graph)
    try:
        lam = la.eigvalsh(lap, check_finite=False)
    except la.LinAlgError as exc:
        raise NumericalError(f"eigensolver failed: {exc}") from exc
    lam = np.sort(lam)
    if lam[0] < -SPECTRUM_TOL or lam[-1] > 2 + SPECTRUM_TOL:
        raise NumericalError(
            f"eigenvalues escape [0, 2]: min={lam[0]:.3e}, max={lam[-1]:.17g}"
        )
    if abs(lam[0]) > SPECTRUM_TOL:
        raise NumericalError(f"smallest eigenvalue {lam[0]:.3e} is not 0")
    if verify:
        _residual_spot_check(lap, lam, graph.degrees)
    return SpectrumResult(np.clip(lam, 0.0, 2.0), graph.n, graph.m, graph.seed)


def pool(spectra: Sequence[SpectrumResult]) -> SpectrumResult:
    """Merge several spectra into the seed-averaged ESD (equal sizes)."""
    if not spectra:
        raise DomainError("nothing to pool")
    sizes = {s.n for s in spectra}
    if len(sizes) != 1:
        raise DomainError("pooled spectra must come from graphs of the same size")
    seeds: list[int] = []
    for s in spectra:
        seeds.extend(s.seed if isinstance(s.seed, tuple) else (s.seed,))
    lam = np.sort(np.concatenate([s.eigenvalues for s in spectra]))
    return SpectrumResult(lam, spectra[0].n, spectra[0].m, tuple(seeds))


def _herglotz_checks(z: complex, value: complex) -> None:
    if abs(value) > 1.0 / z.imag * (1 + 1e-12):
        raise NumericalError(f"|m(z)| = {abs(value)} exceeds 1/Im z at z={z}")
    if not value.imag > 0:
        raise NumericalError(f"Im m(z) = {value.imag} is not positive at z={z}")


def stieltjes_direct(spec: SpectrumResult, z: complex) -> StieltjesEval:
    """``(1/n) Σ_i 1 / (λ_i - z)`` from a computed spectrum."""
    z = check_upper(z)
    terms = 1.0 / (spec.eigenvalues - z)
    value = complex(math.fsum(terms.real.tolist()), math.fsum(terms.imag.tolist())) / len(terms)
    _herglotz_checks(z, value)
    return StieltjesEval(z, value, Method.DIRECT_EIG)


def stieltjes_solve(graph: Graph, z: complex, block: int = 256) -> StieltjesEval:
    """``(1/n) Tr (L - z)^-1`` through one LU factorization and ``n`` solves."""
    z = check_upper(z)
    check_dense(graph.n)
    n = graph.n
    shifted = laplacian_dense(graph).astype(np.complex128)
    shifted[np.diag_indices(n)] -= z
    try:
        lu = la.lu_factor(shifted, check_finite=False)
    except la.LinAlgError as exc:
        raise NumericalError(f"factorization failed: {exc}") from exc
    diag = np.empty(n, dtype=np.complex128)
    for start in range(0, n, block):
        stop = min(n, start + block)
        rhs = np.zeros((n, stop - start), dtype=np.complex128)
        rhs[np.arange(start, stop), np.arange(stop - start)] = 1.0
        sol = la.lu_solve(lu, rhs, check_finite=False)
        diag[start:stop] = sol[np.arange(start, stop), np.arange(stop - start)]
    value = complex(math.fsum(diag.real.tolist()), math.fsum(diag.imag.tolist())) / n
    _herglotz_checks(z, value)
    return StieltjesEval(z, value, Method.DIRECT_SOLVE)


def moment_trace(graph: Graph, k: int, engine: str = "auto") -> float:
    """``(1/n) Tr W^k`` as the local average of ``k``-step return probabilities."""
    if isinstance(k, bool) or not isinstance(k, (int, np.integer)) or k < 0:
        raise DomainError(f"k must be a nonnegative integer, got {k!r}")
    if k == 0:
        return 1.0
    return local_average(graph, LocalFunctionalSpec(int(k)), engine=engine)


def moment_traces(graph: Graph, k_max: int, engine: str = "auto") -> np.ndarray:
    """``[moment_trace(graph, k) for k in 0..k_max]`` sharing one sweep.

    ``auto`` always sweeps here: series orders reach K ~ 40, where balls
    cover the whole graph and per-root work no longer pays off.
    """
    if k_max < 0:
        raise DomainError(f"k_max must be >= 0, got {k_max}")
    _resolve_engine(graph, engine)
    if engine == "ball":
        return np.array([moment_trace(graph, k, engine="ball") for k in range(k_max + 1)])
    rows = sweep_return_probabilities(graph, k_max)
    out = np.array([math.fsum(row.tolist()) / graph.n for row in rows])
    out[0] = 1.0
    return out


def _as_sorted(x: SpectrumResult | Iterable[float]) -> np.ndarray:
    arr = x.eigenvalues if isinstance(x, SpectrumResult) else np.sort(np.asarray(list(x), dtype=float))
    if arr.size == 0:
        raise DomainError("empty spectrum")
    return arr


def kolmogorov_distance(
    a: SpectrumResult | Iterable[float],
    b: SpectrumResult | Iterable[float],
    tol: float = 0.0,
) -> float:
    """``sup_x |F_a(x) - F_b(x)|`` for the two empirical CDFs.

    With ``tol > 0`` eigenvalues of the merged sample that chain together
    within ``tol`` are treated as one point: the CDFs are compared only at the
    right end of each such cluster. This keeps an exact atom (for example the
    eigenvalue 1 shared by many vertices) from registering as spurious mass
    differences when the solver places its copies a few ulps apart.
    """
    xa, xb = _as_sorted(a), _as_sorted(b)
    grid = np.sort(np.concatenate([xa, xb]))
    if tol > 0:
        ends = np.append(np.diff(grid) > tol, True)
        grid = grid[ends]
    fa = np.searchsorted(xa, grid, side="right") / len(xa)
    fb = np.searchsorted(xb, grid, side="right") / len(xb)
    return float(np.max(np.abs(fa - fb)))


def write_spectrum_csv(fh: TextIO, spec: SpectrumResult) -> None:
    fh.write("index,eigenvalue\n")
    for i, lam in enumerate(spec.eigenvalues.tolist(), start=1):
        fh.write(f"{i},{lam:.17g}\n")


def write_histogram_csv(fh: TextIO, spec: SpectrumResult, bins: int = DEFAULT_BINS) -> None:
    edges, mass = spec.histogram(bins)
    fh.write("bin_lo,bin_hi,mass\n")
    for lo, hi, w in zip(edges[:-1].tolist(), edges[1:].tolist(), mass.tolist()):
        fh.write(f"{lo:.17g},{hi:.17g},{w:.17g}\n")


def write_stieltjes_csv(fh: TextIO, evals: Iterable[StieltjesEval]) -> None:
    fh.write("re_z,im_z,re_m,im_m,method,K,tail_bound\n")
    for ev in evals:
        k = "" if ev.K is None else str(ev.K)
        tb = "" if ev.tail_bound is None else f"{ev.tail_bound:.17g}"
        fh.write(
            f"{ev.z.real:.17g},{ev.z.imag:.17g},{ev.value.real:.17g},{ev.value.imag:.17g},"
            f"{ev.method.value},{k},{tb}\n"
        )

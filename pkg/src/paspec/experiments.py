"""Multi-seed, multi-size studies and the explicit concentration bounds.

Studies are pure functions of their configuration: each ``(n, seed)`` cell is
computed independently and cells are reduced in sorted order, so reports do
not depend on the number of worker processes.
"""

from __future__ import annotations

import hashlib
import json
import math
import os
from dataclasses import asdict, dataclass, field
from functools import partial
from typing import Any, Sequence

import numpy as np

from ._parallel import pmap
from .errors import DomainError, NumericalError
from .local import LocalFunctionalSpec, ball_max_degrees, local_average
from .pa_graph import generate
from .spectral import (
    DEFAULT_BINS,
    SPECTRUM_TOL,
    SpectrumResult,
    eigenvalues,
    kolmogorov_distance,
    moment_traces,
    pool,
    stieltjes_direct,
)

_INT64_MAX = 2**63 - 1


def n_ball_bound(K: int, r: int) -> int:
    """``1 + K + K^2 + ... + K^(r+1)``: vertex count bound for a radius-``r+1`` ball."""
    if isinstance(K, bool) or not isinstance(K, (int, np.integer)) or K < 1:
        raise DomainError(f"K must be an integer >= 1, got {K!r}")
    if isinstance(r, bool) or not isinstance(r, (int, np.integer)) or r < 0:
        raise DomainError(f"r must be an integer >= 0, got {r!r}")
    K, r = int(K), int(r)
    total = sum(K**j for j in range(r + 2))
    if total > _INT64_MAX:
        raise DomainError(f"N_(r+1)(K) overflows 64-bit integers for K={K}, r={r}")
    return total


def azuma_constant(r: int, m: int, K: int) -> int:
    """Martingale increment constant ``2 (m + 1) N_(r+1)(K)``."""
    if isinstance(m, bool) or not isinstance(m, (int, np.integer)) or m < 1:
        raise DomainError(f"m must be a positive integer, got {m!r}")
    return 2 * (int(m) + 1) * n_ball_bound(K, r)


def azuma_bound(n: int, eps: float, r: int, m: int, K: int, sup_f: float) -> float:
    """Right-hand side ``2 exp(-eps^2 n / (2 c^2 ||f||^2))`` of the truncated
    concentration inequality. Reported raw: values near 2 are vacuous."""
    if not n > 0 or not eps > 0 or not sup_f > 0:
        raise DomainError("n, eps and sup_f must be positive")
    c = azuma_constant(r, m, K)
    return 2.0 * math.exp(-(eps * eps) * n / (2.0 * float(c) ** 2 * sup_f * sup_f))


def _fmt_complex(z: complex) -> str:
    return f"{z.real:.17g}{'+' if z.imag >= 0 else '-'}{abs(z.imag):.17g}i"


@dataclass(frozen=True)
class StudyConfig:
    m: int
    n_list: tuple[int, ...]
    seeds: tuple[int, ...]
    k_list: tuple[int, ...] = (2, 3, 4)
    z_list: tuple[complex, ...] = (1 + 1.5j,)
    K_rule: str | int = "log"
    bins: int = DEFAULT_BINS
    engine: str = "auto"

    def __post_init__(self) -> None:
        for name in ("n_list", "seeds", "k_list", "z_list"):
            object.__setattr__(self, name, tuple(getattr(self, name)))
            if not getattr(self, name):
                raise DomainError(f"{name} must be nonempty")
        object.__setattr__(self, "z_list", tuple(complex(z) for z in self.z_list))
        if self.m < 2:
            raise DomainError(f"m must be >= 2, got {self.m}")
        if any(n < 2 for n in self.n_list):
            raise DomainError("all sizes must be >= 2")
        if any(k < 0 for k in self.k_list):
            raise DomainError("moment orders must be >= 0")
        if any(not z.imag > 0 for z in self.z_list):
            raise DomainError("Im z must be positive")
        if self.K_rule != "log" and not (isinstance(self.K_rule, int) and self.K_rule >= 1):
            raise DomainError(f"K_rule must be 'log' or a positive integer, got {self.K_rule!r}")
        if self.bins < 1:
            raise DomainError("bins must be >= 1")

    def K_for(self, n: int) -> int:
        """Degree cap for size ``n``; ``"log"`` means ``floor(log n)``, never below ``m``."""
        K = int(math.floor(math.log(n))) if self.K_rule == "log" else int(self.K_rule)
        return max(K, self.m)

    def to_dict(self) -> dict[str, Any]:
        d = asdict(self)
        d["n_list"] = list(self.n_list)
        d["seeds"] = list(self.seeds)
        d["k_list"] = list(self.k_list)
        d["z_list"] = [_fmt_complex(z) for z in self.z_list]
        return d

    def digest(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:12]


@dataclass
class StudyReport:
    kind: str
    config: dict[str, Any]
    tables: dict[str, list[dict[str, Any]]]
    flags: dict[str, bool]
    digest: str
    notes: dict[str, Any] = field(default_factory=dict)

    def to_json(self) -> str:
        return json.dumps(
            {
                "kind": self.kind,
                "config": self.config,
                "config_hash": self.digest,
                "flags": self.flags,
                "notes": self.notes,
                "tables": self.tables,
            },
            indent=2,
            sort_keys=True,
            default=_json_default,
        )

    def write(self, outdir: str | os.PathLike) -> list[str]:
        """Write the JSON report and one CSV per table; return the paths."""
        os.makedirs(outdir, exist_ok=True)
        stem = os.path.join(os.fspath(outdir), f"{self.kind}_{self.digest}")
        paths = [stem + ".json"]
        with open(paths[0], "w") as fh:
            fh.write(self.to_json() + "\n")
        for name, rows in self.tables.items():
            path = f"{stem}_{name}.csv"
            write_rows_csv(path, rows)
            paths.append(path)
        return paths


def _json_default(obj: Any) -> Any:
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    raise TypeError(f"not JSON serializable: {type(obj).__name__}")


def _csv_cell(x: Any) -> str:
    if x is None:
        return ""
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, (float, np.floating)):
        return f"{float(x):.17g}"
    return str(x)


def write_rows_csv(path: str, rows: list[dict[str, Any]]) -> None:
    with open(path, "w") as fh:
        if not rows:
            return
        cols = list(rows[0].keys())
        fh.write(",".join(cols) + "\n")
        for row in rows:
            fh.write(",".join(_csv_cell(row[c]) for c in cols) + "\n")


def _sample_std(values: Sequence[float]) -> float:
    return float(np.std(values, ddof=1)) if len(values) > 1 else 0.0


def _mean(values: Sequence[float]) -> float:
    return math.fsum(values) / len(values)


def _nonincreasing(seq: Sequence[float]) -> bool:
    return all(b <= a for a, b in zip(seq, seq[1:]))


def _strictly_decreasing(seq: Sequence[float]) -> bool:
    return all(b < a for a, b in zip(seq, seq[1:]))


# ---------------------------------------------------------------------------
# concentration
# ---------------------------------------------------------------------------


def _concentration_cell(cell: tuple[int, int], config: StudyConfig) -> dict[int, tuple[float, float, float]]:
    n, seed = cell
    g = generate(n, config.m, seed)
    K = config.K_for(n)
    out = {}
    for k in config.k_list:
        full = local_average(g, LocalFunctionalSpec(k), engine=config.engine)
        trunc = local_average(g, LocalFunctionalSpec(k, K), engine=config.engine)
        for v in (full, trunc):
            if not -1e-12 <= v <= 1 + 1e-12:
                raise NumericalError(f"local average {v} outside [0, 1] (n={n}, seed={seed}, k={k})")
        kept = float(np.mean(ball_max_degrees(g, k) <= K))
        out[k] = (full, trunc, kept)
    return out


def concentration_study(config: StudyConfig, jobs: int = 1) -> StudyReport:
    """Ensembles of ``S_n(F_k)`` with and without the degree truncation.

    Per ``(n, k)``: mean, sample std and standard error of the untruncated and
    truncated averages, the mean absolute truncation gap, and the raw Azuma
    bound evaluated at ``eps = 2 * std``.
    """
    if len(config.seeds) < 10:
        raise DomainError("concentration_study needs >= 10 seeds")
    cells = [(n, s) for n in config.n_list for s in config.seeds]
    results = pmap(partial(_concentration_cell, config=config), cells, jobs)
    by_cell = dict(zip(cells, results))

    rows: list[dict[str, Any]] = []
    samples: list[dict[str, Any]] = []
    for k in config.k_list:
        for n in config.n_list:
            full = [by_cell[(n, s)][k][0] for s in config.seeds]
            trunc = [by_cell[(n, s)][k][1] for s in config.seeds]
            for s, f, t in zip(config.seeds, full, trunc):
                samples.append({"n": n, "k": k, "seed": s, "S": f, "S_trunc": t})
            std = _sample_std(full)
            K = config.K_for(n)
            eps = 2.0 * std
            rows.append(
                {
                    "n": n,
                    "k": k,
                    "K": K,
                    "n_seeds": len(full),
                    "mean": _mean(full),
                    "std": std,
                    "stderr": std / math.sqrt(len(full)),
                    "trunc_mean": _mean(trunc),
                    "trunc_std": _sample_std(trunc),
                    "gap_mean": _mean([abs(f - t) for f, t in zip(full, trunc)]),
                    # share of roots whose radius-k ball has all degrees <= K
                    "kept_fraction": _mean([by_cell[(n, s)][k][2] for s in config.seeds]),
                    "azuma_eps": eps,
                    "azuma_bound": azuma_bound(n, eps, k, config.m, K, 1.0) if eps > 0 else None,
                }
            )

    flags: dict[str, bool] = {}
    for k in config.k_list:
        ks = [r for r in rows if r["k"] == k]
        flags[f"std_nonincreasing_k{k}"] = _nonincreasing([r["std"] for r in ks])
        flags[f"gap_decreasing_k{k}"] = _strictly_decreasing([r["gap_mean"] for r in ks])
    return StudyReport(
        "concentration",
        config.to_dict(),
        {"summary": rows, "samples": samples},
        flags,
        config.digest(),
    )


# ---------------------------------------------------------------------------
# convergence
# ---------------------------------------------------------------------------


def _convergence_cell(cell: tuple[int, int], config: StudyConfig) -> dict[str, Any]:
    n, seed = cell
    g = generate(n, config.m, seed)
    traces = moment_traces(g, max(config.k_list), engine=config.engine)
    spec = eigenvalues(g)
    stieltjes = [stieltjes_direct(spec, z).value for z in config.z_list]
    return {
        "moments": {k: float(traces[k]) for k in config.k_list},
        "eigenvalues": spec.eigenvalues,
        "stieltjes": stieltjes,
    }


def convergence_study(config: StudyConfig, jobs: int = 1) -> StudyReport:
    """Seed-averaged moments, ESDs and ``m_n(z)`` across sizes, with cross-size deltas."""
    if len(config.n_list) < 3:
        raise DomainError("need >= 3 sizes")
    if len(config.seeds) < 5:
        raise DomainError("convergence_study needs >= 5 seeds")
    cells = [(n, s) for n in config.n_list for s in config.seeds]
    results = pmap(partial(_convergence_cell, config=config), cells, jobs)
    by_cell = dict(zip(cells, results))

    per_n: list[dict[str, Any]] = []
    pooled: dict[int, SpectrumResult] = {}
    histogram_rows: list[dict[str, Any]] = []
    mean_m: dict[int, list[complex]] = {}
    for n in config.n_list:
        cs = [by_cell[(n, s)] for s in config.seeds]
        row: dict[str, Any] = {"n": n, "n_seeds": len(cs)}
        for k in config.k_list:
            vals = [c["moments"][k] for c in cs]
            row[f"moment_k{k}"] = _mean(vals)
            row[f"moment_k{k}_std"] = _sample_std(vals)
        mean_m[n] = []
        for j, z in enumerate(config.z_list):
            vals = [c["stieltjes"][j] for c in cs]
            mz = complex(math.fsum(v.real for v in vals), math.fsum(v.imag for v in vals)) / len(vals)
            if abs(mz) > 1.0 / z.imag * (1 + 1e-12) or not mz.imag > 0:
                raise NumericalError(f"averaged m_n(z) violates resolvent bounds at z={z}")
            mean_m[n].append(mz)
            row[f"m_re[{_fmt_complex(z)}]"] = mz.real
            row[f"m_im[{_fmt_complex(z)}]"] = mz.imag
        per_n.append(row)
        pooled[n] = pool(
            [SpectrumResult(c["eigenvalues"], n, config.m, s) for c, s in zip(cs, config.seeds)]
        )
        edges, mass = pooled[n].histogram(config.bins)
        for lo, hi, w in zip(edges[:-1], edges[1:], mass):
            histogram_rows.append({"n": n, "bin_lo": float(lo), "bin_hi": float(hi), "mass": float(w)})

    deltas: list[dict[str, Any]] = []
    ns = list(config.n_list)
    for a, b in zip(ns, ns[1:]):
        ra = next(r for r in per_n if r["n"] == a)
        rb = next(r for r in per_n if r["n"] == b)
        d: dict[str, Any] = {"n_from": a, "n_to": b}
        for k in config.k_list:
            d[f"moment_k{k}"] = abs(ra[f"moment_k{k}"] - rb[f"moment_k{k}"])
        d["kolmogorov"] = kolmogorov_distance(pooled[a], pooled[b], tol=SPECTRUM_TOL)
        d["kolmogorov_raw"] = kolmogorov_distance(pooled[a], pooled[b])
        for j, z in enumerate(config.z_list):
            d[f"stieltjes[{_fmt_complex(z)}]"] = abs(mean_m[a][j] - mean_m[b][j])
        deltas.append(d)

    flags = {
        f"{key}_decreasing": _strictly_decreasing([d[key] for d in deltas])
        for key in deltas[0]
        if key not in ("n_from", "n_to", "kolmogorov_raw")
    }
    return StudyReport(
        "convergence",
        config.to_dict(),
        {"per_n": per_n, "deltas": deltas, "histogram": histogram_rows},
        flags,
        config.digest(),
    )

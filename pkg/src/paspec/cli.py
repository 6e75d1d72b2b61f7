"""Command-line front end.

Every output carries the fully resolved configuration: CSV files start with a
``# config: {...}`` line, JSON documents have a ``config`` key, graph files
carry ``n``, ``m`` and ``seed`` in their header.

Exit codes: 0 success, 2 usage error, 3 domain or precondition error,
4 numerical failure. Errors are reported as one line on stderr.
"""

from __future__ import annotations

import argparse
import io
import json
import math
import re
import sys
from contextlib import contextmanager
from typing import Any, Iterator, Sequence, TextIO

from . import __version__
from .errors import DomainError, GraphFormatError, NumericalError
from .experiments import StudyConfig, concentration_study, convergence_study
from .local import ENGINES, dump_ball, extract_ball
from .neumann import in_domain, limit_estimate, required_K, stieltjes_neumann, write_limit_csv
from .operators import DENSE_LIMIT_ENV
from .pa_graph import Graph, generate, load, serialize
from .spectral import (
    DEFAULT_BINS,
    eigenvalues,
    moment_traces,
    stieltjes_direct,
    stieltjes_solve,
    write_histogram_csv,
    write_spectrum_csv,
    write_stieltjes_csv,
)

EXIT_OK, EXIT_USAGE, EXIT_DOMAIN, EXIT_NUMERIC = 0, 2, 3, 4
HELP_WIDTH = 100

_COMPLEX_CHARS = re.compile(r"^[0-9.eE+\-i]+$")


class UsageError(Exception):
    pass


# ---------------------------------------------------------------------------
# argument types (function names appear in --help)
# ---------------------------------------------------------------------------


def complex_(text: str) -> complex:
    """Parse ``a+bi`` / ``a-bi`` / ``bi`` / ``a`` with decimal components."""
    s = text.strip()
    if not s or not _COMPLEX_CHARS.match(s) or s.count("i") > 1 or ("i" in s and not s.endswith("i")):
        raise argparse.ArgumentTypeError(f"invalid complex number {text!r} (use a+bi)")
    try:
        z = complex(s.replace("i", "j"))
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid complex number {text!r} (use a+bi)") from None
    if not (math.isfinite(z.real) and math.isfinite(z.imag)):
        raise argparse.ArgumentTypeError(f"non-finite complex number {text!r}")
    return z


complex_.__name__ = "complex"


def int_list(text: str) -> list[int]:
    """Comma-separated integers; ``a-b`` expands to the inclusive range."""
    out: list[int] = []
    try:
        for part in text.split(","):
            part = part.strip()
            if re.fullmatch(r"\d+-\d+", part):
                lo, hi = (int(x) for x in part.split("-"))
                if hi < lo:
                    raise ValueError
                out.extend(range(lo, hi + 1))
            else:
                out.append(int(part))
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid integer list {text!r}") from None
    if not out:
        raise argparse.ArgumentTypeError("empty integer list")
    return out


int_list.__name__ = "int-list"


def complex_list(text: str) -> list[complex]:
    return [complex_(part) for part in text.split(",")]


complex_list.__name__ = "complex-list"


def k_rule(text: str) -> str | int:
    if text == "log":
        return "log"
    try:
        return int(text)
    except ValueError:
        raise argparse.ArgumentTypeError("K rule must be 'log' or an integer") from None


k_rule.__name__ = "log|int"


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------


class _HelpFormatter(argparse.HelpFormatter):
    def __init__(self, prog: str) -> None:
        super().__init__(prog, width=HELP_WIDTH, max_help_position=34)

    def _get_help_string(self, action: argparse.Action) -> str:
        text = action.help or ""
        if action.option_strings and action.nargs != 0 and action.dest != "help":
            tname = getattr(action.type, "__name__", "str") if action.type else "str"
            default = "required" if action.required else _show_default(action.default)
            text += f" [{tname}; default: {default}]"
        return text


def _show_default(value: Any) -> str:
    """Render a default the way it would be typed on the command line."""
    if isinstance(value, complex):
        return _fmt_z(value)
    if isinstance(value, list):
        if len(value) > 2 and value == list(range(value[0], value[-1] + 1)):
            return f"{value[0]}-{value[-1]}"
        return ",".join(_show_default(v) for v in value)
    # '%' would be read as a format directive by argparse
    return str(value).replace("%", "%%")


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):  # type: ignore[override]
        raise UsageError(f"{self.prog}: {message}")


def _add_output(p: argparse.ArgumentParser, formats: bool = True) -> None:
    p.add_argument("--out", default="-", help="output path, '-' for stdout")
    if formats:
        p.add_argument("--format", choices=("csv", "json"), default="csv", help="output format")


def _add_input(p: argparse.ArgumentParser) -> None:
    p.add_argument("--in", dest="input", required=True, help="graph file written by 'generate'")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(
        prog="paspec",
        description="Preferential-attachment multigraphs and their normalized Laplacian spectra.",
        formatter_class=_HelpFormatter,
        epilog=f"Set {DENSE_LIMIT_ENV} to change the dense-matrix size limit (default 5000).",
    )
    parser.add_argument("--version", action="version", version=f"paspec {__version__}")
    sub = parser.add_subparsers(dest="verb", metavar="VERB", parser_class=_Parser)
    sub.required = True

    def verb(name: str, help_: str) -> argparse.ArgumentParser:
        return sub.add_parser(name, help=help_, description=help_, formatter_class=_HelpFormatter)

    p = verb("generate", "grow a preferential-attachment multigraph and write it as a graph file")
    p.add_argument("--n", type=int, required=True, help="number of vertices")
    p.add_argument("--m", type=int, default=2, help="edges added per new vertex")
    p.add_argument("--seed", type=int, default=0, help="64-bit PRNG seed")
    _add_output(p, formats=False)

    p = verb("spectrum", "eigenvalues of the normalized Laplacian and their histogram")
    _add_input(p)
    p.add_argument("--bins", type=int, default=DEFAULT_BINS, help="histogram bins over [0, 2]")
    p.add_argument("--hist-out", default=None, help="also write the ESD histogram CSV here")
    _add_output(p)

    p = verb("stieltjes", "Stieltjes transform m_n(z) of the spectral distribution")
    _add_input(p)
    p.add_argument("--z", type=complex_, action="append", required=True,
                   help="evaluation point a+bi with b > 0; repeatable")
    p.add_argument("--method", choices=("direct", "solve", "neumann"), default="direct",
                   help="direct eigenvalues, linear solves, or truncated Neumann series")
    p.add_argument("--K", type=int, default=None, help="Neumann truncation level")
    p.add_argument("--eps", type=float, default=None,
                   help="Neumann target error; picks the smallest sufficient K")
    p.add_argument("--engine", choices=ENGINES, default="auto", help="trace-moment engine")
    _add_output(p)

    p = verb("moments", "normalized trace moments (1/n) Tr W^k as local return-probability averages")
    _add_input(p)
    p.add_argument("--k-max", type=int, default=8, help="largest moment order")
    p.add_argument("--engine", choices=ENGINES, default="auto", help="local evaluation engine")
    _add_output(p)

    p = verb("ball", "dump the decorated rooted ball around a vertex")
    _add_input(p)
    p.add_argument("--u", type=int, required=True, help="root vertex (1-based)")
    p.add_argument("--r", type=int, required=True, help="radius")
    _add_output(p, formats=False)

    for name, help_ in (
        ("concentrate", "self-averaging study of local return-probability averages"),
        ("converge", "cross-size stabilization of moments, ESDs and m_n(z)"),
    ):
        p = verb(name, help_)
        p.add_argument("--m", type=int, default=2, help="edges added per new vertex")
        p.add_argument("--n", type=int_list, required=True, help="graph sizes, e.g. 500,4000")
        p.add_argument("--seeds", type=int_list,
                       default=list(range(30)) if name == "concentrate" else list(range(5)),
                       help="seed list, e.g. 0-29")
        p.add_argument("--k", type=int_list, default=[4] if name == "concentrate" else [2, 3, 4],
                       help="moment / return-probability orders")
        if name == "concentrate":
            p.add_argument("--K-rule", type=k_rule, default="log",
                           help="degree cap: 'log' for floor(log n), or a fixed integer")
        else:
            p.add_argument("--z", type=complex_list, default=[1 + 1.5j],
                           help="comma-separated evaluation points")
            p.add_argument("--bins", type=int, default=DEFAULT_BINS, help="histogram bins over [0, 2]")
            p.add_argument("--limit-eps", type=float, default=None,
                           help="also estimate the limiting transform on the Neumann domain "
                                "with this truncation error")
        p.add_argument("--engine", choices=ENGINES, default="auto", help="local evaluation engine")
        p.add_argument("--jobs", type=int, default=1, help="worker processes (results do not depend on it)")
        p.add_argument("--outdir", default=".", help="directory for the JSON report and CSV tables")
    return parser


# ---------------------------------------------------------------------------
# helpers
# ---------------------------------------------------------------------------


@contextmanager
def _open_out(path: str) -> Iterator[TextIO]:
    if path == "-":
        yield sys.stdout
    else:
        with open(path, "w") as fh:
            yield fh


def _fmt_z(z: complex) -> str:
    return f"{z.real:.17g}{'+' if z.imag >= 0 else '-'}{abs(z.imag):.17g}i"


def _config(args: argparse.Namespace, graph: Graph | None = None) -> dict[str, Any]:
    cfg: dict[str, Any] = {"paspec": __version__}
    for key, value in sorted(vars(args).items()):
        if isinstance(value, complex):
            value = _fmt_z(value)
        elif isinstance(value, list) and value and isinstance(value[0], complex):
            value = [_fmt_z(z) for z in value]
        cfg[key] = value
    if graph is not None:
        cfg["graph"] = {"n": graph.n, "m": graph.m, "seed": graph.seed}
    return cfg


def _config_line(cfg: dict[str, Any]) -> str:
    return "# config: " + json.dumps(cfg, sort_keys=True) + "\n"


def _emit(args: argparse.Namespace, cfg: dict[str, Any], csv_body: str, payload: dict[str, Any]) -> None:
    with _open_out(args.out) as fh:
        if args.format == "json":
            fh.write(json.dumps({"config": cfg, **payload}, indent=2, sort_keys=True) + "\n")
        else:
            fh.write(_config_line(cfg))
            fh.write(csv_body)


# ---------------------------------------------------------------------------
# verbs
# ---------------------------------------------------------------------------


def _cmd_generate(args: argparse.Namespace) -> None:
    g = generate(args.n, args.m, args.seed)
    data = serialize(g)
    if args.out == "-":
        sys.stdout.write(data.decode("ascii"))
    else:
        with open(args.out, "wb") as fh:
            fh.write(data)


def _cmd_spectrum(args: argparse.Namespace) -> None:
    g = load(args.input)
    spec = eigenvalues(g)
    cfg = _config(args, g)
    buf = io.StringIO()
    write_spectrum_csv(buf, spec)
    edges, mass = spec.histogram(args.bins)
    payload = {
        "eigenvalues": spec.eigenvalues.tolist(),
        "histogram": {"edges": edges.tolist(), "mass": mass.tolist()},
    }
    _emit(args, cfg, buf.getvalue(), payload)
    if args.hist_out:
        with open(args.hist_out, "w") as fh:
            fh.write(_config_line(cfg))
            write_histogram_csv(fh, spec, args.bins)


def _cmd_stieltjes(args: argparse.Namespace) -> None:
    if args.method == "neumann":
        if args.K is None and args.eps is None:
            raise UsageError("stieltjes: --method neumann requires --K or --eps")
        if args.K is not None and args.eps is not None:
            raise UsageError("stieltjes: give only one of --K and --eps")
        for z in args.z:
            if not in_domain(z):
                raise DomainError("z outside Neumann domain |1-z|>1")
    elif args.K is not None or args.eps is not None:
        raise UsageError("stieltjes: --K/--eps only apply to --method neumann")
    for z in args.z:
        if not z.imag > 0:
            raise DomainError("Im z must be positive")

    g = load(args.input)
    evals = []
    if args.method == "direct":
        spec = eigenvalues(g)
        evals = [stieltjes_direct(spec, z) for z in args.z]
    elif args.method == "solve":
        evals = [stieltjes_solve(g, z) for z in args.z]
    else:
        levels = [args.K if args.K is not None else required_K(z, args.eps) for z in args.z]
        traces = moment_traces(g, max(levels) - 1, engine=args.engine)
        evals = [stieltjes_neumann(g, z, K, traces=traces) for z, K in zip(args.z, levels)]
    buf = io.StringIO()
    write_stieltjes_csv(buf, evals)
    payload = {
        "values": [
            {
                "z": [e.z.real, e.z.imag],
                "m": [e.value.real, e.value.imag],
                "method": e.method.value,
                "K": e.K,
                "tail_bound": e.tail_bound,
            }
            for e in evals
        ]
    }
    _emit(args, _config(args, g), buf.getvalue(), payload)


def _cmd_moments(args: argparse.Namespace) -> None:
    if args.k_max < 0:
        raise DomainError("--k-max must be >= 0")
    g = load(args.input)
    traces = moment_traces(g, args.k_max, engine=args.engine)
    body = "k,moment\n" + "".join(f"{k},{t:.17g}\n" for k, t in enumerate(traces.tolist()))
    _emit(args, _config(args, g), body, {"moments": traces.tolist()})


def _cmd_ball(args: argparse.Namespace) -> None:
    g = load(args.input)
    ball = extract_ball(g, args.u, args.r)
    with _open_out(args.out) as fh:
        fh.write(_config_line(_config(args, g)))
        fh.write(dump_ball(ball))


def _study_config(args: argparse.Namespace) -> StudyConfig:
    if args.jobs < 1:
        raise DomainError("--jobs must be >= 1")
    kwargs: dict[str, Any] = dict(
        m=args.m, n_list=tuple(args.n), seeds=tuple(args.seeds), k_list=tuple(args.k), engine=args.engine
    )
    if args.verb == "concentrate":
        kwargs["K_rule"] = args.K_rule
    else:
        kwargs["z_list"] = tuple(args.z)
        kwargs["bins"] = args.bins
    return StudyConfig(**kwargs)


def _cmd_study(args: argparse.Namespace) -> None:
    config = _study_config(args)
    if args.verb == "concentrate":
        report = concentration_study(config, jobs=args.jobs)
    else:
        report = convergence_study(config, jobs=args.jobs)
    paths = report.write(args.outdir)
    if args.verb == "converge" and args.limit_eps is not None:
        for z in config.z_list:
            if not in_domain(z):
                continue
            est = limit_estimate(
                config.m, z, config.n_list, config.seeds, required_K(z, args.limit_eps),
                engine=config.engine, jobs=args.jobs,
            )
            path = f"{args.outdir}/limit_{config.digest()}_{_fmt_z(z)}.csv"
            with open(path, "w") as fh:
                fh.write(_config_line({**config.to_dict(), "limit_eps": args.limit_eps}))
                write_limit_csv(fh, est)
            paths.append(path)
    for p in paths:
        print(p)


_COMMANDS = {
    "generate": _cmd_generate,
    "spectrum": _cmd_spectrum,
    "stieltjes": _cmd_stieltjes,
    "moments": _cmd_moments,
    "ball": _cmd_ball,
    "concentrate": _cmd_study,
    "converge": _cmd_study,
}


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        _COMMANDS[args.verb](args)
    except UsageError as exc:
        print(f"error: usage: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (DomainError, GraphFormatError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    except NumericalError as exc:
        print(f"error: numeric: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())

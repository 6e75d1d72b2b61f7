"""Rewrite the golden ``--help`` texts: ``python3 tests/golden/regen.py``."""

import contextlib
import io
import pathlib

from paspec.cli import main

VERBS = ("generate", "spectrum", "stieltjes", "moments", "ball", "concentrate", "converge")
HERE = pathlib.Path(__file__).parent


def help_text(*argv: str) -> str:
    buf = io.StringIO()
    with contextlib.redirect_stdout(buf), contextlib.suppress(SystemExit):
        main([*argv, "--help"])
    return buf.getvalue()


if __name__ == "__main__":
    (HERE / "help_main.txt").write_text(help_text())
    for verb in VERBS:
        (HERE / f"help_{verb}.txt").write_text(help_text(verb))

"""
app/main.py - Command-line front end

Usage: qca <subcommand> [inputs...] [options]

Exit status: 0 on success, 1 when the engine rejects the input (invalid rule,
missing inverse, leaking sector, ...), 2 on schema or option errors.
"""

import argparse
import logging
import sys
from typing import List, Optional, Sequence

from pydantic import ValidationError

from app.commands.handlers import dispatch
from app.commands.reports import write_report
from app.core.errors import QCAError, SchemaError
from app.core.settings import configure_logging, settings_override
from app.models import CommandInvocation

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_INVALID = 1
EXIT_SCHEMA = 2

_SUBCOMMANDS = {
    "validate": ("Translate-commutation report for a rule file", ["rule"]),
    "evolve": ("Heisenberg image of an observable after --steps steps", ["rule", "observable"]),
    "unitary": ("Dense global unitary on a torus", ["rule"]),
    "margolus": ("Two-layer block decomposition of a rule", ["rule"]),
    "invert": ("Inverse rule read off the block decomposition", ["rule"]),
    "classify": ("Canonical family of a nearest-neighbor qubit rule", ["rule"]),
    "clifford-search": ("All Clifford rules of a given half width", []),
    "clifford-evolve": ("Symbolic evolution of a single Pauli letter", ["clifford"]),
    "quasiprob": ("Transition quasi-probabilities of a qubit rule", ["rule"]),
    "walk": ("Per-site probabilities of a coined walk, one row per step", ["walk"]),
    "quantize": ("Quantum rule of a reversible classical automaton", ["automaton"]),
}


def _common_options() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("-o", "--output", help="Report file (default: stdout)")
    common.add_argument("--rule-output", help="Also write the produced rule as a rule file")
    common.add_argument(
        "--torus", type=int, nargs="+", help="Torus periods, one per lattice dimension"
    )
    common.add_argument("--steps", type=int, default=1, help="Number of time steps")
    common.add_argument("--half-width", type=int, default=1, help="Clifford half width N")
    common.add_argument("--letter", default="x", help="Pauli letter to evolve (x, y or z)")
    common.add_argument("--site", type=int, default=0, help="Site of the evolved letter")
    common.add_argument(
        "--spacing", type=int, default=1, help="Spread Clifford strings over this spacing"
    )
    common.add_argument(
        "--etas", type=int, nargs=2, default=[0, 0], help="Wigner indices of the two observables"
    )
    common.add_argument(
        "--seed", type=int, help="Seed for generic elements (default from QCA_SEED)"
    )
    common.add_argument("--dimension-cap", type=int, help="Largest dense dimension allowed")
    common.add_argument("--log-level", help="Logging level (default from QCA_LOG_LEVEL)")
    return common


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qca", description="Reversible quantum cellular automaton toolkit"
    )
    sub = parser.add_subparsers(dest="subcommand", required=True)
    common = _common_options()
    for name, (help_text, inputs) in _SUBCOMMANDS.items():
        cmd = sub.add_parser(name, help=help_text, parents=[common])
        for label in inputs:
            cmd.add_argument(label, help=f"{label} definition file (JSON)")
    return parser


def _invocation(args: argparse.Namespace) -> CommandInvocation:
    inputs = [getattr(args, label) for label in _SUBCOMMANDS[args.subcommand][1]]
    return CommandInvocation(
        subcommand=args.subcommand,
        inputs=inputs,
        output=args.output,
        rule_output=args.rule_output,
        torus=args.torus,
        steps=args.steps,
        half_width=args.half_width,
        letter=args.letter,
        site=args.site,
        spacing=args.spacing,
        etas=tuple(args.etas),
        seed=args.seed,
        dimension_cap=args.dimension_cap,
    )


def run(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code in (0, None) else EXIT_SCHEMA

    configure_logging(args.log_level)
    try:
        inv = _invocation(args)
    except ValidationError as exc:
        first = exc.errors()[0]
        location = ".".join(str(x) for x in first.get("loc", ()))
        print(f"error: {location}: {first.get('msg')}", file=sys.stderr)
        return EXIT_SCHEMA

    try:
        with settings_override(seed=inv.seed, dimension_cap=inv.dimension_cap):
            result = dispatch(inv)
    except SchemaError as exc:
        logger.debug("Schema error", exc_info=True)
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SCHEMA
    except QCAError as exc:
        logger.debug("Engine rejected input", exc_info=True)
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INVALID

    write_report(result.text, inv.output)
    if result.status != EXIT_OK:
        logger.warning("%s finished with status %d", inv.subcommand, result.status)
    return result.status


def main(argv: Optional[List[str]] = None) -> None:
    sys.exit(run(argv))


if __name__ == "__main__":
    main()

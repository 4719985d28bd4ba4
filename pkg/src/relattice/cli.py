"""Batch command line: ``relattice {eval,rewrite,laws,enum}``.

Exit codes: 0 success, 1 usage error, 2 file or parse error, 3 law
counterexample, 4 evaluation error.
"""

from __future__ import annotations

import argparse
import json
import sys

from .core import Universe
from .enumerator import (
    enumerate_lattice,
    export_dot,
    find_nondistributive_triple,
    standard_sublattices,
    verify_boolean_sublattice,
)
from .errors import EvaluationError, ExprSyntaxError, LatticeError
from .expr import Catalog, evaluate, format_expr, line_col, parse_with_spans
from .laws import LATTICE_AXIOMS, LawId, Verdict, quantified_check
from .rewriter import Strategy, expand_trace, normalize

EXIT_USAGE, EXIT_INPUT, EXIT_LAW, EXIT_EVAL = 1, 2, 3, 4


class CliError(Exception):
    def __init__(self, code: int, message: str):
        super().__init__(message)
        self.code = code


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise CliError(EXIT_USAGE, f"usage: {message}")


def _positive(text: str) -> int:
    value = int(text)
    if value <= 0:
        raise argparse.ArgumentTypeError(f"must be positive: {text}")
    return value


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="relattice", description="Relational lattice engine.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    ev = sub.add_parser("eval", help="evaluate an expression")
    ev.add_argument("-u", "--universe", required=True)
    ev.add_argument("-c", "--catalog", required=True)
    ev.add_argument("-e", "--expr", required=True)
    ev.add_argument("--table", action="store_true", help="aligned table instead of JSON")

    rw = sub.add_parser("rewrite", help="normalize an expression")
    rw.add_argument("-u", "--universe", required=True)
    rw.add_argument("-c", "--catalog", required=True)
    rw.add_argument("-e", "--expr", required=True)
    rw.add_argument("--strategy", choices=[s.value for s in Strategy], default="pushdown")
    rw.add_argument("--budget", type=_positive, default=1000)
    rw.add_argument("--trace", action="store_true", help="also print the steps as JSON lines")
    rw.add_argument("--expand", action="store_true", help="expand macro steps of the trace into primitive steps")

    lw = sub.add_parser("laws", help="check lattice laws over a universe")
    lw.add_argument("-u", "--universe", required=True)
    lw.add_argument("--law", choices=[law.name for law in LawId])
    lw.add_argument("--samples", type=_positive, default=1000)
    lw.add_argument("--seed", type=int, default=0)
    lw.add_argument("--unguarded", action="store_true", help="ignore the distributivity guards")

    en = sub.add_parser("enum", help="enumerate the lattice of a tiny universe")
    en.add_argument("-u", "--universe", required=True)
    en.add_argument("--dot", metavar="PATH")
    en.add_argument("--check-sublattices", action="store_true")
    en.add_argument("--cap", type=_positive, default=10**6)
    en.add_argument("--samples", type=_positive, default=1000)
    en.add_argument("--seed", type=int, default=0)
    return p


def _load_json(path: str):
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except OSError as exc:
        raise CliError(EXIT_INPUT, f"cannot read {path}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise CliError(EXIT_INPUT, f"{path}:{exc.lineno}:{exc.colno}: invalid JSON: {exc.msg}") from None


def _load_universe(path: str) -> Universe:
    try:
        return Universe.from_json(_load_json(path))
    except LatticeError as exc:
        raise CliError(EXIT_INPUT, f"{path}: {exc}") from None


def _load_catalog(path: str, u: Universe) -> Catalog:
    doc = _load_json(path)
    if not isinstance(doc, dict):
        raise CliError(EXIT_INPUT, f"{path}: catalog must be an object of named relations")
    try:
        return Catalog.from_json(u, doc)
    except LatticeError as exc:
        raise CliError(EXIT_INPUT, f"{path}: {exc}") from None


def _parse(text: str):
    try:
        return parse_with_spans(text)
    except ExprSyntaxError as exc:
        raise CliError(EXIT_INPUT, f"expression {exc}") from None


def _eval_error(exc: EvaluationError, text: str, spans) -> CliError:
    path = exc.path
    while path and path not in spans:
        path = path[:-1]
    line, col = line_col(text, spans.get(path, 0))
    return CliError(EXIT_EVAL, f"{line}:{col}: {type(exc.cause).__name__}: {exc.cause}")


def cmd_eval(args, out) -> int:
    u = _load_universe(args.universe)
    c = _load_catalog(args.catalog, u)
    e, spans = _parse(args.expr)
    try:
        r = evaluate(e, c)
    except EvaluationError as exc:
        raise _eval_error(exc, args.expr, spans) from None
    out.write(r.table() if args.table else r.dumps() + "\n")
    return 0


def cmd_rewrite(args, out) -> int:
    u = _load_universe(args.universe)
    c = _load_catalog(args.catalog, u)
    e, _ = _parse(args.expr)
    try:
        result, trace = normalize(e, c, args.strategy, args.budget)
    except LatticeError as exc:
        raise CliError(EXIT_EVAL, f"{type(exc).__name__}: {exc}") from None
    out.write(format_expr(result) + "\n")
    if args.trace:
        if args.expand:
            trace = expand_trace(trace, c)
        out.write(trace.to_jsonl())
    if trace.exhausted:
        print(f"note: budget of {args.budget} steps exhausted; printed the best expression found", file=sys.stderr)
    return 0


def cmd_laws(args, out) -> int:
    u = _load_universe(args.universe)
    laws = [LawId[args.law]] if args.law else list(LawId)
    status = 0
    for law in laws:
        guarded = not args.unguarded
        report = quantified_check(law, u, args.samples, args.seed, guarded=guarded)
        out.write(json.dumps(report.to_json()) + "\n")
        if report.verdict is Verdict.COUNTEREXAMPLE and (guarded or not law.guarded):
            status = EXIT_LAW
    return status


def cmd_enum(args, out) -> int:
    u = _load_universe(args.universe)
    try:
        g = enumerate_lattice(u, args.cap)
    except LatticeError as exc:
        raise CliError(EXIT_INPUT, str(exc)) from None
    summary = {
        "elements": len(g),
        "covers": len(g.covers),
        "axioms": {
            law.name: quantified_check(law, u, args.samples, args.seed).verdict.value
            for law in LATTICE_AXIOMS + (LawId.PROPOSITION_1,)
        },
    }
    if len(g) ** 3 <= 10**7:
        triple = find_nondistributive_triple(g)
        summary["nondistributive_witness"] = (
            None if triple is None else {k: r.to_json() for k, r in zip("ABC", triple)}
        )
    if args.check_sublattices:
        summary["sublattices"] = {
            name: verify_boolean_sublattice(g, members).to_json()
            for name, members in standard_sublattices(g).items()
        }
    if args.dot:
        try:
            with open(args.dot, "w", encoding="utf-8") as fh:
                fh.write(export_dot(g))
        except OSError as exc:
            raise CliError(EXIT_INPUT, f"cannot write {args.dot}: {exc.strerror}") from None
    out.write(json.dumps(summary, indent=2) + "\n")
    status = 0
    if any(v == Verdict.COUNTEREXAMPLE.value for v in summary["axioms"].values()):
        status = EXIT_LAW
    return status


COMMANDS = {"eval": cmd_eval, "rewrite": cmd_rewrite, "laws": cmd_laws, "enum": cmd_enum}


def main(argv=None, out=None) -> int:
    out = out or sys.stdout
    try:
        args = build_parser().parse_args(argv)
        return COMMANDS[args.command](args, out)
    except CliError as exc:
        print(f"relattice: error: {exc}".replace("\n", " "), file=sys.stderr)
        return exc.code


if __name__ == "__main__":
    sys.exit(main())

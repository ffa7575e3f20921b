"""
Command line for needlab.

Usage:
    needlab eval "let i = \\x. x in i i" --semantics stacked --trace
    needlab denote "\\a. let b = b in b" --heap heap.txt --env env.json --rank 3
    needlab check --suite lemmas --cases 100 --seed 42 --json
    needlab counterexample --json

Exit codes: 0 success, 1 failed property or stuck evaluation, 2 usage or input error.
"""

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional

from pydantic import ValidationError

from .config import CliConfig, Semantics, Subcommand, Suite
from .denotational import Denoter, HeapVariant
from .domain import DEFAULT_RANK, Env, describe, lift_env
from .errors import GeneralApplicationError, HeapFormatError, NeedlabError
from .natural import DEFAULT_FUEL, DerivTrace, NatResult, eval_nat
from .stacked import run_via_stack
from .syntax import Expr, Heap, Parser, parse_heap, print_expr
from .verifier import check_counterexample, check_failed_fixes, counterexample_outcome, run_suite

logger = logging.getLogger(__name__)


# =============================================================================
# INPUT
# =============================================================================

def read_text(path: str) -> str:
    try:
        return Path(path).read_text(encoding="utf-8")
    except OSError as e:
        raise HeapFormatError(f"Cannot read {path}: {e}")


def read_expr(text: str, strict: bool = False) -> Expr:
    """Parse program text; general applications are desugared with a warning unless strict."""
    if text == "-":
        text = sys.stdin.read()
    try:
        return Parser(text).parse()
    except GeneralApplicationError:
        if strict:
            raise
    parser = Parser(text, desugar=True)
    e = parser.parse()
    logger.warning(
        "Desugared %d general application(s) into let bindings; pass --strict to reject them",
        parser.desugared,
    )
    return e


def read_heap(path: Optional[str], strict: bool = False) -> Heap:
    if path is None:
        return Heap()
    text = read_text(path)
    try:
        return parse_heap(text)
    except HeapFormatError:
        if strict:
            raise
    heap = parse_heap(text, desugar=True)
    logger.warning("Desugared general applications in %s; pass --strict to reject them", path)
    return heap


def read_env(path: Optional[str], rank: int) -> Env:
    """Env JSON {"rank": r, "bindings": {...}}, moved to the requested rank."""
    if path is None:
        return Env.bottom(rank)
    try:
        env = Env.from_json(json.loads(read_text(path)))
    except (json.JSONDecodeError, KeyError, TypeError, ValueError) as e:
        raise HeapFormatError(f"Malformed environment file {path}: {e}")
    return lift_env(env, rank)


# =============================================================================
# OUTPUT
# =============================================================================

def emit_json(data: Any) -> None:
    print(json.dumps(data, indent=2, sort_keys=True, ensure_ascii=False))


def _trace_lines(node: DerivTrace, depth: int = 0) -> List[str]:
    heap_in, side_in = node.input
    heap_out, side_out = node.output
    shown_in = print_expr(side_in) if isinstance(side_in, Expr) else str(side_in)
    shown_out = print_expr(side_out) if isinstance(side_out, Expr) else str(side_out)
    lines = [f"{'  ' * depth}{node.rule.value}: {heap_in} : {shown_in} ⇓ {heap_out} : {shown_out}"]
    for child in node.children:
        lines.extend(_trace_lines(child, depth + 1))
    return lines


# =============================================================================
# SUBCOMMANDS
# =============================================================================

def eval_command(config: CliConfig) -> int:
    heap = read_heap(config.heap_file, config.strict)
    e = read_expr(config.program, config.strict)
    fuel = config.fuel or DEFAULT_FUEL
    if config.semantics == Semantics.STACKED:
        result: NatResult = run_via_stack(heap, e, fuel=fuel)
    else:
        result = eval_nat(heap, e, fuel=fuel)

    if config.json_output:
        data = {"semantics": config.semantics.value, **result.to_dict()}
        if config.trace and result.trace is not None:
            data["trace"] = result.trace.to_dict()
            data["rule_counts"] = result.trace.rule_counts()
        emit_json(data)
    else:
        print(result.describe())
        if config.trace and result.trace is not None:
            print("\n".join(_trace_lines(result.trace)))
    return 0 if result.is_success() else 1


def denote_command(config: CliConfig) -> int:
    rank = config.rank or DEFAULT_RANK
    variant = HeapVariant(config.variant)
    heap = read_heap(config.heap_file, config.strict)
    e = read_expr(config.program, config.strict)
    rho = read_env(config.env_file, rank)
    den = Denoter(rank, variant)
    env = den.heap(heap, rho)
    value = den.expr(e, env)

    if config.json_output:
        emit_json({
            "rank": rank,
            "variant": variant.value,
            "value": value.to_json(),
            "describe": describe(value, config.show_table),
            "heap_env": env.to_json(),
        })
    else:
        print(describe(value, config.show_table))
        for x in heap.names():
            print(f"  {x} ↦ {describe(env(x), config.show_table)}")
    return 0


def check_command(config: CliConfig) -> int:
    cfg = config.gen_config()
    reports = run_suite(config.suite, cfg)
    ok = all(r.ok for r in reports)
    data = {
        "suite": config.suite.value,
        "seed": cfg.seed,
        "cases": cfg.cases,
        "rank": cfg.rank,
        "fuel": cfg.fuel,
        "ok": ok,
        "reports": [r.to_dict(config.timings) for r in reports],
    }
    if config.report_file:
        path = Path(config.report_file)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(json.dumps(data, indent=2, sort_keys=True, ensure_ascii=False) + "\n", encoding="utf-8")
        logger.info("Report written to %s", path)

    if config.json_output:
        emit_json(data)
    else:
        for report in reports:
            print(report.summary())
            for witness in report.witnesses[:3]:
                print(f"    {json.dumps(witness.to_dict(), sort_keys=True, ensure_ascii=False)}")
        failed = sum(1 for r in reports if not r.ok)
        print(f"{len(reports)} properties, {failed} failed")
    return 0 if ok else 1


def counterexample_command(config: CliConfig) -> int:
    outcome = counterexample_outcome()
    reports = [check_counterexample(), check_failed_fixes()]
    ok = all(r.ok for r in reports)
    if config.json_output:
        emit_json({**outcome, "ok": ok, "reports": [r.to_dict(config.timings) for r in reports]})
    else:
        print(f"heap {outcome.get('heap')}, expression {outcome.get('expr')}, environment {outcome.get('env')}")
        if "join_exact" in outcome:
            print(f"join:   {outcome['join_exact']['lhs']} vs {outcome['join_exact']['rhs']} -> {outcome['join_variant']}")
            print(f"update: {outcome['update_variant']}")
            print(f"join with empty environment: {outcome['bottom_env_join']}")
        for report in reports:
            print(report.summary())
            for note in report.notes:
                print(f"    {note}")
    return 0 if ok else 1


COMMANDS: Dict[Subcommand, Callable[[CliConfig], int]] = {
    Subcommand.EVAL: eval_command,
    Subcommand.DENOTE: denote_command,
    Subcommand.CHECK: check_command,
    Subcommand.COUNTEREXAMPLE: counterexample_command,
}


# =============================================================================
# ARGUMENTS
# =============================================================================

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="needlab", description="Call-by-need semantics laboratory")
    parser.add_argument("-v", "--verbose", action="count", default=0, help="More logging (repeatable)")
    parser.add_argument("-q", "--quiet", action="store_true", help="Errors only")
    sub = parser.add_subparsers(dest="subcommand", required=True)

    eval_ = sub.add_parser("eval", help="Evaluate a program operationally")
    eval_.add_argument("program", help="Program text, or - for stdin")
    eval_.add_argument("--semantics", choices=[s.value for s in Semantics], default="natural")
    eval_.add_argument("--fuel", type=int, help=f"Derivation node budget (default {DEFAULT_FUEL})")
    eval_.add_argument("--trace", action="store_true", help="Print the derivation tree")
    eval_.add_argument("--heap", dest="heap_file", help="Initial heap file")

    denote = sub.add_parser("denote", help="Compute a denotation at a finite rank")
    denote.add_argument("program", help="Program text, or - for stdin")
    denote.add_argument("--rank", type=int, help=f"Rank 1-4 (default {DEFAULT_RANK})")
    denote.add_argument("--variant", choices=[v.value for v in HeapVariant], default="join")
    denote.add_argument("--heap", dest="heap_file", help="Heap file")
    denote.add_argument("--env", dest="env_file", help="Environment JSON file")
    denote.add_argument("--show-table", action="store_true", help="Print raw function tables")

    check = sub.add_parser("check", help="Run the verification suite")
    check.add_argument("--suite", choices=[s.value for s in Suite], default="all")
    check.add_argument("--cases", type=int, help="Cases per generated property")
    check.add_argument("--seed", type=int)
    check.add_argument("--jobs", type=int, default=1, help="Worker processes")
    check.add_argument("--rank", type=int)
    check.add_argument("--fuel", type=int)
    check.add_argument("--timings", action="store_true", help="Include durations in reports")
    check.add_argument("--report", dest="report_file", help="Also write the JSON report to a file")

    counter = sub.add_parser("counterexample", help="Reproduce the counterexample and failed repairs")
    counter.add_argument("--timings", action="store_true", help="Include durations in reports")

    for p in (eval_, denote, check, counter):
        p.add_argument("--json", dest="json_output", action="store_true", help="Machine-readable output")
    for p in (eval_, denote):
        p.add_argument("--strict", action="store_true", help="Reject general applications")
    return parser


def configure_logging(verbose: int, quiet: bool) -> None:
    if quiet:
        level = logging.ERROR
    elif verbose >= 2:
        level = logging.DEBUG
    elif verbose == 1:
        level = logging.INFO
    else:
        level = logging.WARNING
    logging.basicConfig(level=level, stream=sys.stderr, format="%(levelname)s %(name)s: %(message)s")


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    configure_logging(args.verbose, args.quiet)
    values = {k: v for k, v in vars(args).items() if k not in ("verbose", "quiet") and v is not None}
    try:
        config = CliConfig(**values)
        return COMMANDS[config.subcommand](config)
    except (NeedlabError, ValidationError) as e:
        print(f"needlab: error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())

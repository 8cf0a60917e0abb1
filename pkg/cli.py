"""
Main Application - Separation Subclass Toolkit
Command-line front end wiring structures, schemes, games and axiom
generation together. Every command prints a report as key=value lines, or
as JSON with --json.

Exit codes: 0 membership/true, 1 non-membership/false/mismatch, 2 operational error.
"""

import argparse
import logging
import sys
import time
from contextlib import contextmanager
from typing import Any, Dict, Iterator, List, Optional, Sequence

from pydantic import BaseModel, Field

from axiomgen import beta_hat, generate_axioms, index_range, render_axioms
from config import get_settings
from data_storage import DataStorage
from errors import MethodDisagreementError, SchemeError, SeparationToolkitError
from game import GameSolver
from logic import compile_formula, eval_formula, is_universal
from scheme_format import print_scheme
from schemes import builtin_names, builtin_scheme
from separation import (
    MonadicRule,
    SentenceRule,
    Verdict,
    check_membership_direct,
    check_pseudoelementary,
    check_superclass,
    to_pseudoelementary,
)
from sexpr import print_formula, print_signature
from tptp import write_fof

logger = logging.getLogger(__name__)

EXIT_TRUE = 0
EXIT_FALSE = 1
EXIT_ERROR = 2


class Report(BaseModel):
    """Machine-readable command result"""

    command: str
    verdict: str
    detail: Dict[str, Any] = Field(default_factory=dict)
    timings: Dict[str, float] = Field(default_factory=dict)

    def lines(self) -> List[str]:
        out = [f"command={self.command}", f"verdict={self.verdict}"]
        out += [f"{key}={_flat(value)}" for key, value in self.detail.items()]
        out += [f"time.{key}={value:.4f}" for key, value in self.timings.items()]
        return out


def _flat(value: Any) -> str:
    if isinstance(value, bool):
        return str(value).lower()
    if isinstance(value, (list, tuple)):
        return ";".join(_flat(v) for v in value)
    if isinstance(value, dict):
        return ",".join(f"{k}:{_flat(v)}" for k, v in value.items())
    return str(value)


@contextmanager
def _timed(report: Report, key: str) -> Iterator[None]:
    start = time.perf_counter()
    try:
        yield
    finally:
        report.timings[key] = report.timings.get(key, 0.0) + time.perf_counter() - start


def emit(report: Report, as_json: bool) -> None:
    if as_json:
        print(report.model_dump_json())
    else:
        print("\n".join(report.lines()))


# ============================================================================
# Commands
# ============================================================================

def _membership_by_game(A, scheme, max_index: Optional[int]) -> Verdict:
    A.conforms_to(scheme.signature)
    if not check_superclass(A, scheme.superclass):
        return Verdict.SUPERCLASS_VIOLATION
    for index, rule in enumerate(scheme.rules):
        if isinstance(rule, SentenceRule):
            holds = eval_formula(A, {}, rule.sentence)
        else:
            holds = GameSolver(A, rule, max_index).has_omega_strategy()
        if not holds:
            logger.info("structure fails rule %s", scheme.rule_id(index))
            return Verdict.OUT
    return Verdict.IN


def cmd_check(args, storage: DataStorage) -> int:
    A = storage.load_structure(args.structure)
    scheme = storage.load_scheme(args.scheme)
    report = Report(command="check", verdict="", detail={"method": args.method})

    verdicts = {}
    if args.method in ("direct", "both"):
        with _timed(report, "direct"):
            verdicts["direct"] = check_membership_direct(A, scheme, args.max_index)
    if args.method in ("game", "both"):
        with _timed(report, "game"):
            verdicts["game"] = _membership_by_game(A, scheme, args.max_index)

    if len(set(verdicts.values())) > 1:
        raise MethodDisagreementError(
            "direct and game membership disagree",
            {name: v.value for name, v in verdicts.items()},
        )
    verdict = next(iter(verdicts.values()))
    report.verdict = verdict.value
    if args.method == "both":
        report.detail["agree"] = True
    emit(report, args.json)
    return EXIT_TRUE if verdict == Verdict.IN else EXIT_FALSE


def _positive_rule(scheme, ident: Optional[str]):
    if ident is None:
        positive = scheme.positive_rules()
        if len(positive) != 1:
            raise SchemeError(f"--rule is required: scheme has {len(positive)} positive-order rules")
        index, rule = positive[0]
        return scheme.rule_id(index), rule
    index, rule = scheme.find_rule(ident)
    if not isinstance(rule, MonadicRule):
        raise SchemeError(f"rule {ident} has order 0 and no game")
    return scheme.rule_id(index), rule


def cmd_game(args, storage: DataStorage) -> int:
    A = storage.load_structure(args.structure)
    scheme = storage.load_scheme(args.scheme)
    A.conforms_to(scheme.signature)
    rule_id, rule = _positive_rule(scheme, args.rule)
    solver = GameSolver(A, rule, args.max_index)
    report = Report(command="game", verdict="", detail={"rule": rule_id, "max_index": solver.max_index})

    with _timed(report, "solve"):
        if args.survival:
            survival = solver.max_survival_rounds()
            report.verdict = str(survival)
            won = survival.omega
        elif args.omega:
            won = solver.has_omega_strategy()
            report.verdict = "omega" if won else "finite"
            if not won:
                report.detail["trace"] = [
                    f"{step['round']}:{step['move']}->{step['response']}"
                    for step in solver.forall_line(get_settings().survival_cap)
                ]
        else:
            won = solver.has_r_strategy(None, args.rounds, include_round0=not args.reduced)
            report.verdict = "true" if won else "false"
            report.detail["rounds"] = args.rounds
            report.detail["game"] = "reduced" if args.reduced else "simple"
    report.detail.update(solver.stats())
    emit(report, args.json)
    return EXIT_TRUE if won else EXIT_FALSE


def cmd_axioms(args, storage: DataStorage) -> int:
    scheme = storage.load_scheme(args.scheme)
    report = Report(command="axioms", verdict="written")
    with _timed(report, "generate"):
        cells = generate_axioms(scheme, args.rounds, args.max_index, simplify_output=args.simplify)
    text = render_axioms(cells, args.format)
    universal = all(is_universal(cell.sentence) for cell in cells)
    comment = ";" if args.format == "sexpr" else "%"

    if args.output is None and args.json:
        report.detail.update({"sentences": len(cells), "universal": universal, "text": text})
        emit(report, True)
        return EXIT_TRUE
    if args.output is None:
        sys.stdout.write(text)
        print(f"{comment} sentences={len(cells)}")
        print(f"{comment} universal={str(universal).lower()}")
        return EXIT_TRUE

    storage.write_text(args.output, text)
    report.detail.update({"output": args.output, "sentences": len(cells), "universal": universal})
    emit(report, args.json)
    return EXIT_TRUE


def _parse_assignment(items: Sequence[str]) -> Dict[str, int]:
    env = {}
    for item in items:
        name, _, value = item.partition("=")
        if not name or not value.strip().lstrip("-").isdigit():
            raise SchemeError(f"bad assignment '{item}', expected NAME=ELEMENT")
        env[name] = int(value)
    return env


def _parse_monadic(items: Sequence[str]) -> List[frozenset]:
    sets: Dict[int, frozenset] = {}
    for item in items:
        index, _, members = item.partition("=")
        if not index.isdigit() or int(index) < 1:
            raise SchemeError(f"bad monadic set '{item}', expected K=e1,e2,...")
        sets[int(index)] = frozenset(int(e) for e in members.split(",") if e.strip())
    return [sets.get(k, frozenset()) for k in range(1, max(sets, default=0) + 1)]


def cmd_eval(args, storage: DataStorage) -> int:
    A = storage.load_structure(args.structure)
    sig = storage.load_scheme(args.scheme).signature if args.scheme else None
    phi = storage.load_formula(args.formula, sig)
    report = Report(command="eval", verdict="")
    with _timed(report, "eval"):
        holds = eval_formula(A, _parse_assignment(args.assign), phi, _parse_monadic(args.mon))
    report.verdict = "true" if holds else "false"
    emit(report, args.json)
    return EXIT_TRUE if holds else EXIT_FALSE


def cmd_crosscheck(args, storage: DataStorage) -> int:
    A = storage.load_structure(args.structure)
    scheme = storage.load_scheme(args.scheme)
    A.conforms_to(scheme.signature)
    report = Report(command="crosscheck", verdict="")
    cells, mismatches = 0, []

    for index, rule in scheme.positive_rules():
        rule_id = scheme.rule_id(index)
        for i in index_range(rule, args.max_index):
            solver = GameSolver(A, rule, i)
            for r in range(args.rounds + 1):
                with _timed(report, "formula"):
                    sentence = beta_hat(rule, r, i, rule_index=index)
                    by_formula = compile_formula(A, sentence)()
                with _timed(report, "game"):
                    by_game = solver.has_r_strategy(None, r, include_round0=True)
                cells += 1
                if by_formula != by_game:
                    mismatches.append(f"{rule_id}:r{r}:i{i}")
                    logger.error("❌ %s r=%d i=%d: formula says %s, game says %s", rule_id, r, i, by_formula, by_game)

    report.verdict = "agree" if not mismatches else "mismatch"
    report.detail = {"cells": cells, "mismatches": mismatches}
    emit(report, args.json)
    return EXIT_TRUE if not mismatches else EXIT_FALSE


def _truncated(scheme, max_index: Optional[int]):
    if scheme.is_essentially_finite():
        return scheme
    if max_index is None:
        raise SchemeError("--max-index is required for schemes with generated closure rules")
    return scheme.truncated(max_index)


def cmd_pseudo(args, storage: DataStorage) -> int:
    scheme = _truncated(storage.load_scheme(args.scheme), args.max_index)
    theory = to_pseudoelementary(scheme)
    if args.format == "sexpr":
        lines = [f"; {print_signature(theory.signature)}"]
        lines += [f"; superclass\n{print_formula(phi)}" for phi in theory.superclass]
        lines += [print_formula(phi) for phi in theory.sentences]
    else:
        lines = [write_fof(f"superclass_{n}", phi) for n, phi in enumerate(theory.superclass)]
        lines += [write_fof(f"theory_{n}", phi) for n, phi in enumerate(theory.sentences)]
    text = "\n".join(lines) + "\n"

    if args.output is None:
        sys.stdout.write(text)
        return EXIT_TRUE
    storage.write_text(args.output, text)
    report = Report(command="pseudo", verdict="written", detail={
        "output": args.output,
        "sentences": len(theory.sentences),
        "fresh_relations": [f"{name}/{arity}" for name, arity in theory.fresh_relations],
    })
    emit(report, args.json)
    return EXIT_TRUE


def cmd_pseudo_check(args, storage: DataStorage) -> int:
    A = storage.load_structure(args.structure)
    scheme = _truncated(storage.load_scheme(args.scheme), args.max_index)
    A.conforms_to(scheme.signature)
    report = Report(command="pseudo-check", verdict="")
    with _timed(report, "search"):
        if not check_superclass(A, scheme.superclass):
            verdict = Verdict.SUPERCLASS_VIOLATION
        elif check_pseudoelementary(A, to_pseudoelementary(scheme)):
            verdict = Verdict.IN
        else:
            verdict = Verdict.OUT
    report.verdict = verdict.value
    emit(report, args.json)
    return EXIT_TRUE if verdict == Verdict.IN else EXIT_FALSE


def cmd_scheme(args, storage: DataStorage) -> int:
    text = print_scheme(builtin_scheme(args.name, args.params))
    if args.output is None:
        sys.stdout.write(text)
        return EXIT_TRUE
    storage.write_text(args.output, text)
    emit(Report(command="scheme", verdict="written", detail={"name": args.name, "output": args.output}), args.json)
    return EXIT_TRUE


# ============================================================================
# Argument parsing
# ============================================================================

def _non_negative(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got '{text}'") from None
    if value < 0:
        raise argparse.ArgumentTypeError(f"must be >= 0, got {value}")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cli.py", description="Separation subclass toolkit")
    parser.add_argument("--json", action="store_true", help="print the report as JSON")
    parser.add_argument("--log-level", default=None, help="overrides SEPCLASS_LOG_LEVEL")
    commands = parser.add_subparsers(dest="command", required=True)

    def command(name: str, handler, help_text: str) -> argparse.ArgumentParser:
        sub = commands.add_parser(name, help=help_text)
        sub.set_defaults(handler=handler)
        return sub

    check = command("check", cmd_check, "decide membership of a structure in a scheme's subclass")
    check.add_argument("structure")
    check.add_argument("scheme")
    check.add_argument("--max-index", type=_non_negative)
    check.add_argument("--method", choices=("direct", "game", "both"), default="both")

    game = command("game", cmd_game, "solve the separation game for one rule")
    game.add_argument("structure")
    game.add_argument("scheme")
    game.add_argument("--rule")
    game.add_argument("--max-index", type=_non_negative)
    game.add_argument("--reduced", action="store_true", help="omit round 0 (only with --rounds)")
    mode = game.add_mutually_exclusive_group(required=True)
    mode.add_argument("--rounds", type=_non_negative)
    mode.add_argument("--omega", action="store_true")
    mode.add_argument("--survival", action="store_true")

    axioms = command("axioms", cmd_axioms, "emit the first-order sentences beta-hat(r, i)")
    axioms.add_argument("scheme")
    axioms.add_argument("--rounds", type=_non_negative, default=1)
    axioms.add_argument("--max-index", type=_non_negative)
    axioms.add_argument("--format", choices=("sexpr", "tptp"), default="sexpr")
    axioms.add_argument("--simplify", action="store_true")
    axioms.add_argument("-o", "--output")

    evaluate = command("eval", cmd_eval, "evaluate a formula file on a structure")
    evaluate.add_argument("structure")
    evaluate.add_argument("formula")
    evaluate.add_argument("--scheme", help="scheme file whose signature checks the formula")
    evaluate.add_argument("--assign", action="append", default=[], metavar="NAME=ELEMENT")
    evaluate.add_argument("--mon", action="append", default=[], metavar="K=E1,E2")

    crosscheck = command("crosscheck", cmd_crosscheck, "compare generated sentences with the game solver")
    crosscheck.add_argument("structure")
    crosscheck.add_argument("scheme")
    crosscheck.add_argument("--rounds", type=_non_negative, default=2)
    crosscheck.add_argument("--max-index", type=_non_negative)

    pseudo = command("pseudo", cmd_pseudo, "emit the pseudoelementary theory")
    pseudo.add_argument("scheme")
    pseudo.add_argument("--max-index", type=_non_negative)
    pseudo.add_argument("--format", choices=("sexpr", "tptp"), default="sexpr")
    pseudo.add_argument("-o", "--output")

    pseudo_check = command("pseudo-check", cmd_pseudo_check, "decide membership through the pseudoelementary theory")
    pseudo_check.add_argument("structure")
    pseudo_check.add_argument("scheme")
    pseudo_check.add_argument("--max-index", type=_non_negative)

    scheme = command("scheme", cmd_scheme, "export a built-in scheme")
    scheme.add_argument("name", choices=builtin_names())
    scheme.add_argument("params", nargs="*")
    scheme.add_argument("-o", "--output")
    return parser


def setup_logging(level: Optional[str] = None) -> None:
    logging.basicConfig(
        level=(level or get_settings().log_level).upper(),
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
        force=True,
    )


def main(argv: Optional[Sequence[str]] = None) -> int:
    """Application entry point"""
    parser = build_parser()
    args = parser.parse_args(argv)
    setup_logging(args.log_level)
    try:
        return args.handler(args, DataStorage())
    except MethodDisagreementError as e:
        logger.error("❌ %s: %s", e, e.detail)
        emit(Report(command=args.command, verdict="error", detail={"error": str(e), **e.detail}), args.json)
    except (SeparationToolkitError, OSError, ValueError) as e:
        logger.error("❌ %s", e)
        emit(Report(command=args.command, verdict="error", detail={"error": str(e)}), args.json)
    return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())

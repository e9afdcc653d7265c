"""Command-line front end.

Subcommands: ``check-ldi`` (genetic search), ``oracle`` (exhaustive bounded
check), ``check-pldi`` (probabilistic pipeline) and ``sample`` (behavior
sampling, as a debugging aid). Every run embeds its seed in the report, and
identical command lines produce byte-identical JSON reports; wall-clock
timing therefore only appears in the human-readable output.

Exit codes: 0 no violation found / satisfied, 1 violated (or unbounded),
2 infeasible or indeterminate, 64 usage error, 65 unparseable model or
formula, 66 missing input file, 70 internal error.
"""

from __future__ import annotations

import argparse
import dataclasses
import hashlib
import json
import random
import sys
import time
from pathlib import Path

from . import __version__
from .automaton import (
    ModelError,
    ProbabilisticRealTimeAutomaton,
    RealTimeAutomaton,
    parse_model,
    strip_probabilities,
)
from .formula import FormulaError, LinearDurationInvariant, parse_ldi, parse_pldi
from .ga import GaConfig, InfeasibleModelError, check_ldi, sample_behavior, start_states
from .markov import SolverDiagnosticError
from .pldi import check_pldi
from .semantics import (
    DEFAULT_TOLERANCE,
    SearchBudgetError,
    TimeStampedBehavior,
    behavior_length,
    bounded_exact_check,
    lf_value,
    satisfies_ldi,
)

EXIT_OK = 0
EXIT_VIOLATED = 1
EXIT_INDETERMINATE = 2
EXIT_USAGE = 64
EXIT_DATA = 65
EXIT_NOINPUT = 66
EXIT_INTERNAL = 70

_VERDICT_EXIT = {
    "no-violation-found": EXIT_OK,
    "satisfied": EXIT_OK,
    "satisfied-approximately": EXIT_OK,
    "violated": EXIT_VIOLATED,
    "unbounded": EXIT_VIOLATED,
    "infeasible": EXIT_INDETERMINATE,
}


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError(message)


def _read_file(path: str) -> str:
    p = Path(path)
    if not p.is_file():
        raise FileNotFoundError(path)
    return p.read_text(encoding="utf-8")


def _ga_flags(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--pop", type=int, default=90, help="population size")
    sub.add_argument("--pm", type=float, default=0.2, help="mutation probability")
    sub.add_argument("--pd", type=float, default=0.5, help="cut-and-splice probability")
    sub.add_argument("--gens", type=int, default=50, help="generation cap")
    sub.add_argument("--settle", type=int, default=10, help="stop after this many flat generations")
    sub.add_argument("--elite", type=float, default=0.1, help="elite fraction preserved each generation")
    sub.add_argument("--runs", type=int, default=10, help="number of independent seeded runs")
    sub.add_argument("--time-cap", type=float, default=None, help="cap unbounded dwells at lo + this")


def _common_flags(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--seed", type=int, default=0, help="base random seed")
    sub.add_argument("--max-len", type=int, default=8, help="transition-count bound")
    sub.add_argument("--tol", type=float, default=DEFAULT_TOLERANCE, help="comparison tolerance")
    sub.add_argument("--json", dest="json_path", default=None, help="write the JSON report here")
    sub.add_argument(
        "--override-C",
        dest="override_bound",
        type=float,
        default=None,
        help="replace the invariant's right-hand bound",
    )


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="durcheck", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"durcheck {__version__}")
    commands = parser.add_subparsers(dest="command", required=True)

    p = commands.add_parser("check-ldi", help="genetic search for invariant violations")
    p.add_argument("model")
    p.add_argument("spec")
    _ga_flags(p)
    _common_flags(p)

    p = commands.add_parser("oracle", help="exhaustive bounded check")
    p.add_argument("model")
    p.add_argument("spec")
    _common_flags(p)

    p = commands.add_parser("check-pldi", help="probabilistic invariant check")
    p.add_argument("model")
    p.add_argument("spec")
    _ga_flags(p)
    _common_flags(p)

    p = commands.add_parser("sample", help="print sampled behaviors")
    p.add_argument("model")
    p.add_argument("count", type=int)
    p.add_argument("--spec", dest="spec", default=None, help="constrain lengths to this invariant's window")
    _ga_flags(p)
    _common_flags(p)
    return parser


def _config(args: argparse.Namespace) -> GaConfig:
    return GaConfig(
        population_size=args.pop,
        p_mutation=args.pm,
        p_cut_splice=args.pd,
        max_generations=args.gens,
        settle_window=args.settle,
        seed=args.seed,
        max_genes=args.max_len,
        time_cap=args.time_cap,
        runs=args.runs,
        elite_fraction=args.elite,
    )


def _behavior_json(b: TimeStampedBehavior) -> dict:
    return {
        "genes": [
            {
                "source": t.source,
                "target": t.target,
                "lo": t.interval.lo,
                "hi": None if t.interval.hi == float("inf") else t.interval.hi,
                "dwell": dwell,
            }
            for t, dwell in b.genes
        ],
        "text": str(b),
    }


def _base_report(args: argparse.Namespace, model_text: str) -> dict:
    return {
        "version": __version__,
        "command": args.command,
        "argv": sys.argv[1:],
        "model_path": args.model,
        "model_sha256": hashlib.sha256(model_text.encode("utf-8")).hexdigest(),
        "seed": args.seed,
    }


def _emit(report: dict, json_path: str | None, lines: list[str], elapsed: float) -> None:
    for line in lines:
        print(line)
    print(f"elapsed: {elapsed:.3f}s")
    if json_path:
        Path(json_path).write_text(
            json.dumps(report, sort_keys=True, indent=2) + "\n", encoding="utf-8"
        )


def _load_ldi(args: argparse.Namespace):
    spec_text = _read_file(args.spec).strip()
    d = parse_ldi(spec_text)
    if args.override_bound is not None:
        d = dataclasses.replace(d, bound=args.override_bound)
    return d, spec_text


def _require_plain(model, command: str) -> RealTimeAutomaton:
    if not isinstance(model, RealTimeAutomaton):
        raise ModelError(f"{command} needs a plain model; strip the probabilities first")
    return model


def _cmd_check_ldi(args: argparse.Namespace) -> int:
    started = time.perf_counter()
    model_text = _read_file(args.model)
    m = _require_plain(parse_model(model_text), "check-ldi")
    d, spec_text = _load_ldi(args)
    cfg = _config(args)
    report = check_ldi(m, d, cfg, tol=args.tol)
    for ce in report.counterexamples:
        if satisfies_ldi(m, d, ce, tol=args.tol):
            raise SolverDiagnosticError("counterexample failed re-verification", str(ce))
    out = _base_report(args, model_text)
    out.update(
        {
            "spec": spec_text,
            "override_C": args.override_bound,
            "config": dataclasses.asdict(cfg),
            "tolerance": args.tol,
            "verdict": report.verdict,
            "best_value": report.best_value,
            "best_individual": _behavior_json(report.best_individual),
            "generations_run": report.generations_run,
            "fitness_trace": list(report.fitness_trace),
            "counterexample_count": len(report.counterexamples),
            "counterexamples": [_behavior_json(b) for b in report.counterexamples[:100]],
        }
    )
    lines = [
        f"verdict: {report.verdict}",
        f"best value: {report.best_value!r} (bound {d.bound!r})",
        f"generations: {report.generations_run}, counterexamples: {len(report.counterexamples)}",
    ]
    for b in report.counterexamples[:5]:
        lines.append(f"  violates: {b}  value={lf_value(m, d, b)!r}")
    _emit(out, args.json_path, lines, time.perf_counter() - started)
    return _VERDICT_EXIT[report.verdict]


def _cmd_oracle(args: argparse.Namespace) -> int:
    started = time.perf_counter()
    model_text = _read_file(args.model)
    m = _require_plain(parse_model(model_text), "oracle")
    d, spec_text = _load_ldi(args)
    result = bounded_exact_check(m, d, args.max_len, tol=args.tol)
    out = _base_report(args, model_text)
    out.update(
        {
            "spec": spec_text,
            "override_C": args.override_bound,
            "max_len": args.max_len,
            "tolerance": args.tol,
            "verdict": result.verdict,
            "worst_value": None if result.worst_value in (float("inf"), float("-inf")) else result.worst_value,
            "worst_value_text": repr(result.worst_value),
            "witness": _behavior_json(result.witness) if result.witness else None,
            "sequences_examined": result.sequences_examined,
            "unbounded_sequence": [
                {"source": t.source, "target": t.target} for t in result.unbounded_sequence
            ]
            if result.unbounded_sequence
            else None,
            "unbounded_gene": result.unbounded_gene,
        }
    )
    lines = [
        f"verdict: {result.verdict}",
        f"worst value: {result.worst_value!r} (bound {d.bound!r})",
        f"sequences examined: {result.sequences_examined}",
    ]
    if result.witness is not None:
        lines.append(f"witness: {result.witness}")
    if result.unbounded_sequence is not None:
        chain = " ".join(f"{t.source}->{t.target}" for t in result.unbounded_sequence)
        lines.append(f"unbounded along: {chain} (gene {result.unbounded_gene})")
    _emit(out, args.json_path, lines, time.perf_counter() - started)
    return _VERDICT_EXIT[result.verdict]


def _cmd_check_pldi(args: argparse.Namespace) -> int:
    started = time.perf_counter()
    model_text = _read_file(args.model)
    m = parse_model(model_text)
    if not isinstance(m, ProbabilisticRealTimeAutomaton):
        raise ModelError("check-pldi needs a probabilistic model")
    spec_text = _read_file(args.spec).strip()
    p = parse_pldi(spec_text)
    if args.override_bound is not None:
        p = dataclasses.replace(
            p, ldi=dataclasses.replace(p.ldi, bound=args.override_bound)
        )
    cfg = _config(args)
    report = check_pldi(m, p, cfg, args.max_len, tol=args.tol)
    stripped = strip_probabilities(m)
    for ga_report in report.ga_reports:
        for ce in ga_report.counterexamples:
            if satisfies_ldi(stripped, p.ldi, ce, tol=args.tol):
                raise SolverDiagnosticError("counterexample failed re-verification", str(ce))
    out = _base_report(args, model_text)
    out.update(
        {
            "spec": spec_text,
            "override_C": args.override_bound,
            "config": dataclasses.asdict(cfg),
            "max_len": args.max_len,
            "tolerance": args.tol,
            "verdict": report.verdict,
            "threshold": report.threshold,
            "per_state_probability": report.per_state_probability,
            "min_probability": report.min_probability,
            "counterexample_count": report.counterexample_count,
            "patterns": [str(p_) for p_ in report.pattern_set.sorted()],
            "linear_system": report.avoidance.dump if report.avoidance else None,
            "system_size": report.avoidance.system_size if report.avoidance else 0,
        }
    )
    lines = [
        f"verdict: {report.verdict}",
        f"counterexamples harvested: {report.counterexample_count}",
        f"patterns after minimization: {len(report.pattern_set)}",
    ]
    for pattern in report.pattern_set.sorted():
        lines.append(f"  pattern: {pattern}")
    if report.avoidance is not None:
        lines.append("linear system:")
        lines.extend(f"  {eq}" for eq in report.avoidance.dump.splitlines())
    for state, value in report.per_state_probability.items():
        lines.append(f"P[{state}] = {value!r}")
    lines.append(f"min probability: {report.min_probability!r} vs threshold {report.threshold!r}")
    _emit(out, args.json_path, lines, time.perf_counter() - started)
    return _VERDICT_EXIT[report.verdict]


def _cmd_sample(args: argparse.Namespace) -> int:
    started = time.perf_counter()
    model_text = _read_file(args.model)
    m = parse_model(model_text)
    if isinstance(m, ProbabilisticRealTimeAutomaton):
        m = strip_probabilities(m)
    if args.spec is not None:
        d = parse_ldi(_read_file(args.spec).strip())
    else:
        d = LinearDurationInvariant(0.0, float("inf"), (), 0.0)
    cfg = _config(args)
    rng = random.Random(args.seed)
    starts = start_states(m)
    behaviors = []
    for i in range(args.count):
        behaviors.append(
            sample_behavior(m, d, cfg, rng, start=starts[i % len(starts)] if starts else None)
        )
    out = _base_report(args, model_text)
    out.update(
        {
            "count": args.count,
            "behaviors": [_behavior_json(b) for b in behaviors],
        }
    )
    lines = [f"{b}  length={behavior_length(b)!r}" for b in behaviors]
    _emit(out, args.json_path, lines, time.perf_counter() - started)
    return EXIT_OK


_COMMANDS = {
    "check-ldi": _cmd_check_ldi,
    "oracle": _cmd_oracle,
    "check-pldi": _cmd_check_pldi,
    "sample": _cmd_sample,
}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    try:
        return _COMMANDS[args.command](args)
    except FileNotFoundError as exc:
        print(f"missing file: {exc}", file=sys.stderr)
        return EXIT_NOINPUT
    except (ModelError, FormulaError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (InfeasibleModelError, SearchBudgetError) as exc:
        print(f"indeterminate: {exc}", file=sys.stderr)
        return EXIT_INDETERMINATE
    except SolverDiagnosticError as exc:
        print(f"internal error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())

"""Probabilistic invariant checking via counterexample patterns.

Pipeline: strip the probabilities off the model and hunt for invariant
violations with the genetic search, reduce the violating behaviors to their
timestamp-free state sequences, drop every sequence that contains another as
a contiguous subsequence (runs containing the supersequence are a subset of
runs containing the core, so the shorter pattern dominates), and compute the
probability of avoiding all remaining patterns forever on the model's Markov
chain. The invariant holds approximately at threshold lambda when every
state's avoidance probability reaches lambda.

A violated verdict is evidence-backed: every pattern stems from a concrete
re-verifiable counterexample. The satisfied verdict is approximate because
the search may have missed violations. The worst-case quantification treats
every occurrence of a harvested pattern as a violation, which is the
method's documented approximation.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Iterable

from .automaton import (
    ProbabilisticRealTimeAutomaton,
    RealTimeAutomaton,
    strip_probabilities,
    successors,
)
from .formula import LinearDurationInvariant, ProbabilisticLDI
from .ga import GaConfig, GaReport, run_ga_batch
from .markov import AvoidanceResult, avoidance_probability, build_chain
from .semantics import (
    DEFAULT_SEQUENCE_BUDGET,
    DEFAULT_TOLERANCE,
    SearchBudgetError,
    TimeStampedBehavior,
    max_lf_for_sequence,
)

VERDICT_SATISFIED_APPROX = "satisfied-approximately"
VERDICT_VIOLATED = "violated"


@dataclass(frozen=True)
class PathPattern:
    """Timestamp-free state sequence harvested from a counterexample."""

    states: tuple[str, ...]

    def __post_init__(self):
        if len(self.states) < 2:
            raise ValueError("a path pattern needs at least two states")

    def contains(self, other: "PathPattern") -> bool:
        """True iff ``other`` occurs in self as a contiguous subsequence."""
        inner, outer = other.states, self.states
        if len(inner) > len(outer):
            return False
        return any(
            outer[i : i + len(inner)] == inner for i in range(len(outer) - len(inner) + 1)
        )

    def __str__(self) -> str:
        return "->".join(self.states)


@dataclass(frozen=True)
class PatternSet:
    """A set of patterns none of which contains another."""

    patterns: frozenset[PathPattern]

    def __post_init__(self):
        members = sorted(self.patterns, key=lambda p: (len(p.states), p.states))
        for i, p in enumerate(members):
            for q in members[:i]:
                if p.contains(q):
                    raise ValueError(f"pattern {p} contains member {q}; minimize first")

    def sorted(self) -> list[PathPattern]:
        return sorted(self.patterns, key=lambda p: (len(p.states), p.states))

    def __len__(self) -> int:
        return len(self.patterns)


def behavior_pattern(b: TimeStampedBehavior) -> PathPattern:
    """Visited-state sequence of a behavior: sources in order, then the last target."""
    states = tuple(t.source for t in b.transitions) + (b.transitions[-1].target,)
    return PathPattern(states)


def strip_and_dedupe(counterexamples: Iterable[TimeStampedBehavior]) -> set[PathPattern]:
    """Forget dwell times; behaviors differing only in timing collapse together."""
    return {behavior_pattern(b) for b in counterexamples}


def minimize_patterns(patterns: Iterable[PathPattern]) -> PatternSet:
    """Drop every pattern that contains another one as a contiguous subsequence."""
    candidates = sorted(set(patterns), key=lambda p: (len(p.states), p.states))
    kept: list[PathPattern] = []
    for p in candidates:
        if not any(p.contains(q) for q in kept):
            kept.append(p)
    return PatternSet(frozenset(kept))


def collect_counterexamples(
    m: ProbabilisticRealTimeAutomaton,
    d: LinearDurationInvariant,
    cfg: GaConfig,
    max_len: int,
    *,
    tol: float = DEFAULT_TOLERANCE,
) -> list[TimeStampedBehavior]:
    """Harvest violating behaviors from the probability-stripped model.

    Runs the full batch of seeded searches in harvest mode (scanning whole
    populations each generation instead of stopping at the first hit) with
    the gene budget set to ``max_len``, and returns the deduplicated union.
    """
    behaviors, _ = _harvest(strip_probabilities(m), d, cfg, max_len, tol)
    return behaviors


def _harvest(
    stripped: RealTimeAutomaton,
    d: LinearDurationInvariant,
    cfg: GaConfig,
    max_len: int,
    tol: float,
) -> tuple[list[TimeStampedBehavior], list[GaReport]]:
    reports = run_ga_batch(stripped, d, replace(cfg, max_genes=max_len), harvest=True, tol=tol)
    merged: dict[tuple, TimeStampedBehavior] = {}
    for report in reports:
        for ce in report.counterexamples:
            merged.setdefault(ce.sort_key(), ce)
    return list(merged.values()), reports


def shared_core(patterns: PatternSet) -> PathPattern | None:
    """Longest contiguous subsequence (>= 2 states) common to every pattern."""
    members = patterns.sorted()
    if not members:
        return None
    shortest = min(members, key=lambda p: len(p.states)).states
    for length in range(len(shortest), 1, -1):
        candidates = sorted(
            {shortest[i : i + length] for i in range(len(shortest) - length + 1)}
        )
        for candidate in candidates:
            core = PathPattern(candidate)
            if all(p.contains(core) for p in members):
                return core
    return None


def generalize_patterns(
    patterns: PatternSet,
    stripped: RealTimeAutomaton,
    d: LinearDurationInvariant,
    max_len: int,
    *,
    tol: float = DEFAULT_TOLERANCE,
    max_sequences: int = DEFAULT_SEQUENCE_BUDGET,
) -> PatternSet:
    """Replace the whole set by a shared core pattern when that is provably sound.

    The core is adopted only if every behavior of exactly ``max_len``
    transitions whose state sequence contains the core admits a violating
    dwell assignment; then "run contains the core" already implies "run has a
    violating instance" and avoiding the core is the right event to measure.
    Otherwise (including when the exhaustive check would exceed its budget)
    the original set is returned unchanged.
    """
    core = shared_core(patterns)
    if core is None or frozenset([core]) == patterns.patterns:
        return patterns
    outgoing = {s.id: successors(stripped, s.id) for s in stripped.states}
    stack = [(t,) for t in reversed(stripped.transitions)]
    examined = 0
    witnessed = False
    try:
        while stack:
            seq = stack.pop()
            examined += 1
            if examined > max_sequences:
                raise SearchBudgetError("core soundness check exceeded its sequence budget")
            if len(seq) < max_len:
                for t in reversed(outgoing[seq[-1].target]):
                    stack.append(seq + (t,))
                continue
            visited = tuple(t.source for t in seq) + (seq[-1].target,)
            if not PathPattern(visited).contains(core):
                continue
            witnessed = True
            best = max_lf_for_sequence(stripped, d, seq)
            if best is None or best.value <= d.bound + tol:
                return patterns
    except SearchBudgetError:
        return patterns
    if not witnessed:
        return patterns
    return PatternSet(frozenset([core]))


@dataclass(frozen=True)
class PldiReport:
    verdict: str
    per_state_probability: dict[str, float]
    min_probability: float
    threshold: float
    pattern_set: PatternSet
    counterexample_count: int
    ga_reports: tuple[GaReport, ...]
    avoidance: AvoidanceResult | None


def check_pldi(
    m: ProbabilisticRealTimeAutomaton,
    p: ProbabilisticLDI,
    cfg: GaConfig,
    max_len: int,
    *,
    tol: float = DEFAULT_TOLERANCE,
    generalize: bool = False,
) -> PldiReport:
    """Decide the probabilistic invariant against worst-case avoidance.

    With no harvested counterexamples the verdict is approximate satisfaction
    with probability one everywhere. Otherwise the minimal pattern set is
    measured on the model's chain and the minimum per-state avoidance
    probability is compared against the threshold.
    """
    stripped = strip_probabilities(m)
    behaviors, reports = _harvest(stripped, p.ldi, cfg, max_len, tol)
    if not behaviors:
        return PldiReport(
            verdict=VERDICT_SATISFIED_APPROX,
            per_state_probability={s.id: 1.0 for s in m.states},
            min_probability=1.0,
            threshold=p.threshold,
            pattern_set=PatternSet(frozenset()),
            counterexample_count=0,
            ga_reports=tuple(reports),
            avoidance=None,
        )
    patterns = minimize_patterns(strip_and_dedupe(behaviors))
    if generalize:
        patterns = generalize_patterns(patterns, stripped, p.ldi, max_len, tol=tol)
    result = avoidance_probability(build_chain(m), patterns)
    min_probability = min(result.per_state.values())
    verdict = (
        VERDICT_VIOLATED if min_probability < p.threshold - tol else VERDICT_SATISFIED_APPROX
    )
    return PldiReport(
        verdict=verdict,
        per_state_probability=dict(result.per_state),
        min_probability=min_probability,
        threshold=p.threshold,
        pattern_set=patterns,
        counterexample_count=len(behaviors),
        ga_reports=tuple(reports),
        avoidance=result,
    )

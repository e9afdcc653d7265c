"""Duration semantics of time-stamped behaviors and an exact bounded maximizer.

A time-stamped behavior is a chain of (transition, dwell) pairs. The length
of a behavior is the sum of its dwells; the duration of a proposition is the
time spent in source states labeled with it. An invariant is satisfied by a
behavior when its length misses the window or the weighted duration sum stays
under the bound.

Checking an automaton against an invariant amounts to maximizing that
weighted sum over all behaviors whose length lies in the window. Restricted
to one transition sequence this is a linear program with box constraints and
a single coupling constraint, which a greedy pass solves exactly: some
optimum has at most one dwell strictly between its interval endpoints.
``bounded_exact_check`` enumerates every transition sequence up to a length
cap and takes the global maximum, giving an exact oracle for the bounded
fragment of the problem.

All functions here are pure and operate on immutable values, so they are
safe to call concurrently.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .automaton import Model, RealTimeAutomaton, Transition, successors
from .formula import LinearDurationInvariant

DEFAULT_TOLERANCE = 1e-9
DEFAULT_SEQUENCE_BUDGET = 1_000_000

VERDICT_SATISFIED = "satisfied"
VERDICT_VIOLATED = "violated"
VERDICT_UNBOUNDED = "unbounded"
VERDICT_INFEASIBLE = "infeasible"


class UnknownPropositionError(ValueError):
    """A formula proposition is not part of the model's alphabet."""


class SearchBudgetError(RuntimeError):
    """The bounded enumeration exceeded its sequence budget."""


@dataclass(frozen=True)
class TimeStampedBehavior:
    """A nonempty transition chain with one dwell time per step."""

    genes: tuple[tuple[Transition, float], ...]

    def __post_init__(self):
        if not self.genes:
            raise ValueError("a behavior needs at least one gene")
        for t, dwell in self.genes:
            if not t.interval.contains(dwell):
                raise ValueError(f"dwell {dwell!r} outside {t.interval} on {t.source} -> {t.target}")
        for (a, _), (b, _) in zip(self.genes, self.genes[1:]):
            if a.target != b.source:
                raise ValueError(f"broken chain: {a.target!r} != {b.source!r}")

    @property
    def transitions(self) -> tuple[Transition, ...]:
        return tuple(t for t, _ in self.genes)

    @property
    def dwells(self) -> tuple[float, ...]:
        return tuple(d for _, d in self.genes)

    def sort_key(self):
        """Total order used for deterministic tie-breaking."""
        return tuple(
            (t.source, t.target, t.interval.lo, t.interval.hi, dwell) for t, dwell in self.genes
        )

    def __str__(self) -> str:
        return " ".join(f"({t.source}->{t.target}, {d!r})" for t, d in self.genes)


def behavior_length(b: TimeStampedBehavior) -> float:
    """Total time span of the behavior."""
    return math.fsum(b.dwells)


def duration(m: Model, b: TimeStampedBehavior, prop: str) -> float:
    """Time spent in source states labeled ``prop``; the final target adds nothing."""
    return math.fsum(d for t, d in b.genes if prop in m.labels_of(t.source))


def state_weights(m: Model, d: LinearDurationInvariant) -> dict[str, float]:
    """Per-state weight: the summed coefficients of the propositions labeling it.

    Raises UnknownPropositionError when a term proposition is not in the
    model's alphabet; this is the binding check deferred from parse time.
    """
    alphabet = m.propositions
    for _, prop in d.terms:
        if prop not in alphabet:
            raise UnknownPropositionError(f"proposition {prop!r} does not occur in the model")
    return {
        s.id: math.fsum(coefficient for coefficient, prop in d.terms if prop in s.labels)
        for s in m.states
    }


def lf_value(m: Model, d: LinearDurationInvariant, b: TimeStampedBehavior) -> float:
    """The weighted duration sum the invariant bounds (the search's fitness)."""
    weights = state_weights(m, d)
    return math.fsum(weights[t.source] * dwell for t, dwell in b.genes)


def satisfies_ldi(
    m: Model, d: LinearDurationInvariant, b: TimeStampedBehavior, tol: float = DEFAULT_TOLERANCE
) -> bool:
    """Vacuously true outside the length window, otherwise value <= bound + tol."""
    length = behavior_length(b)
    if not d.min_length <= length <= d.max_length:
        return True
    return lf_value(m, d, b) <= d.bound + tol


def satisfies_all_windows(
    m: Model, d: LinearDurationInvariant, b: TimeStampedBehavior, tol: float = DEFAULT_TOLERANCE
) -> bool:
    """True iff every contiguous sub-behavior of ``b`` satisfies the invariant.

    Quadratic in the gene count using prefix sums of dwell and weighted dwell.
    """
    weights = state_weights(m, d)
    n = len(b.genes)
    prefix_t = [0.0] * (n + 1)
    prefix_w = [0.0] * (n + 1)
    for i, (t, dwell) in enumerate(b.genes):
        prefix_t[i + 1] = prefix_t[i] + dwell
        prefix_w[i + 1] = prefix_w[i] + weights[t.source] * dwell
    for i in range(n):
        for j in range(i + 1, n + 1):
            length = prefix_t[j] - prefix_t[i]
            if d.min_length <= length <= d.max_length:
                if prefix_w[j] - prefix_w[i] > d.bound + tol:
                    return False
    return True


@dataclass(frozen=True)
class SequenceMax:
    """Maximum of the weighted duration sum over one transition sequence.

    ``dwells`` is the maximizing assignment, or None when the value is
    unbounded; ``unbounded_gene`` then names a positive-weight gene whose
    dwell can grow without leaving the constraints.
    """

    value: float
    dwells: tuple[float, ...] | None
    unbounded_gene: int | None = None


def max_lf_for_sequence(
    m: Model, d: LinearDurationInvariant, seq: list[Transition] | tuple[Transition, ...]
) -> SequenceMax | None:
    """Maximize sum(w_j * t_j) with t_j in its interval and total in the window.

    Returns None when no dwell assignment can land the total inside
    [min_length, max_length]. Greedy: start every dwell at its lower bound;
    if the total is short of the window, raise dwells in descending-weight
    order just up to the window start; then keep raising positive-weight
    dwells (same order) until they cap out or the total hits the window end.
    """
    if not seq:
        raise ValueError("empty sequence")
    for a, b in zip(seq, seq[1:]):
        if a.target != b.source:
            raise ValueError(f"not a behavior: {a.target!r} != {b.source!r}")
    weights = state_weights(m, d)
    w = [weights[t.source] for t in seq]
    lo = [t.interval.lo for t in seq]
    hi = [t.interval.hi for t in seq]

    lo_total = math.fsum(lo)
    hi_total = math.fsum(hi)
    if lo_total > d.max_length or hi_total < d.min_length:
        return None

    if math.isinf(d.max_length):
        for j, (wj, hj) in enumerate(zip(w, hi)):
            if wj > 0 and math.isinf(hj):
                return SequenceMax(math.inf, None, unbounded_gene=j)

    t = list(lo)
    total = lo_total
    order = sorted(range(len(seq)), key=lambda j: (-w[j], j))
    if total < d.min_length:
        for j in order:
            missing = d.min_length - total
            if missing <= 0:
                break
            step = min(hi[j] - t[j], missing)
            t[j] += step
            total += step
    room = d.max_length - total
    for j in order:
        if w[j] <= 0 or room <= 0:
            continue
        step = min(hi[j] - t[j], room)
        t[j] += step
        room -= step
    value = math.fsum(wj * tj for wj, tj in zip(w, t))
    return SequenceMax(value, tuple(t))


@dataclass(frozen=True)
class OracleResult:
    """Outcome of the exhaustive bounded check.

    ``worst_value`` is the maximum of the weighted duration sum over all
    behaviors with at most ``max_len`` transitions (-inf when no sequence is
    feasible, +inf when unbounded). A violated or unbounded verdict always
    carries a witness behavior or an unbounded-direction certificate.
    """

    verdict: str
    worst_value: float
    witness: TimeStampedBehavior | None
    sequences_examined: int
    max_len: int
    unbounded_sequence: tuple[Transition, ...] | None = None
    unbounded_gene: int | None = None


def bounded_exact_check(
    m: RealTimeAutomaton,
    d: LinearDurationInvariant,
    max_len: int,
    *,
    max_sequences: int = DEFAULT_SEQUENCE_BUDGET,
    tol: float = DEFAULT_TOLERANCE,
) -> OracleResult:
    """Exact check over every behavior with at most ``max_len`` transitions.

    Enumerates transition sequences depth-first in declaration order (so ties
    resolve to the lexicographically least witness) and maximizes each with
    ``max_lf_for_sequence``. The verdict compares the global maximum against
    the bound: violated when it exceeds bound + tol, unbounded when some
    sequence grows without limit. Raises SearchBudgetError beyond
    ``max_sequences`` enumerated sequences.
    """
    if max_len < 1:
        raise ValueError("max_len must be at least 1")
    outgoing = {s.id: successors(m, s.id) for s in m.states}

    best_value = -math.inf
    best_witness: TimeStampedBehavior | None = None
    examined = 0
    # Stack of sequences; extensions pushed in reverse declaration order so
    # that popping visits prefixes in lexicographic order.
    stack: list[tuple[Transition, ...]] = [(t,) for t in reversed(m.transitions)]
    while stack:
        seq = stack.pop()
        examined += 1
        if examined > max_sequences:
            raise SearchBudgetError(
                f"more than {max_sequences} sequences of length <= {max_len}; raise the budget"
            )
        result = max_lf_for_sequence(m, d, seq)
        if result is not None:
            if math.isinf(result.value):
                return OracleResult(
                    verdict=VERDICT_UNBOUNDED,
                    worst_value=math.inf,
                    witness=None,
                    sequences_examined=examined,
                    max_len=max_len,
                    unbounded_sequence=seq,
                    unbounded_gene=result.unbounded_gene,
                )
            if result.value > best_value:
                best_value = result.value
                best_witness = TimeStampedBehavior(tuple(zip(seq, result.dwells)))
        if len(seq) < max_len:
            for t in reversed(outgoing[seq[-1].target]):
                stack.append(seq + (t,))

    if best_witness is None:
        return OracleResult(VERDICT_INFEASIBLE, -math.inf, None, examined, max_len)
    verdict = VERDICT_VIOLATED if best_value > d.bound + tol else VERDICT_SATISFIED
    return OracleResult(verdict, best_value, best_witness, examined, max_len)

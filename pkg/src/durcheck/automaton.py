"""Real-time automata, their probabilistic variant, and the line-oriented model format.

A plain model attaches a dwell-time interval to every transition; a
probabilistic model attaches one dwell interval and one outgoing probability
distribution to every state. Every state doubles as initial and accepting, so
behaviors may start and stop anywhere. Models are immutable after
construction and safe to read from any number of threads.

Model file format (UTF-8, ``#`` starts a comment)::

    state <id> labels <prop>[,<prop>...]
    trans <id> -> <id> [<lo>, <hi|inf>]      # plain models
    trans <id> -> <id> prob <p>              # probabilistic models
    dwell <id> [<lo>, <hi|inf>]              # probabilistic models only

Identifiers start with a letter or underscore (so they can never be confused
with numbers). A ``state`` line may omit the ``labels`` clause for an
unlabeled state. A file mixing ``prob``-annotated and plain transitions is
rejected; the model kind is inferred from which form appears.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from ._lex import TokenStream, format_number, tokenize

PROBABILITY_SUM_TOLERANCE = 1e-9


class ModelError(ValueError):
    """Base class for model parsing and validation failures."""


class ModelSyntaxError(ModelError):
    """Malformed model text; carries the 1-based line and column."""

    def __init__(self, message: str, line: int, column: int | None = None):
        where = f"line {line}" + (f", column {column}" if column is not None else "")
        super().__init__(f"{where}: {message}")
        self.line = line
        self.column = column


class ModelValidationError(ModelError):
    """Structurally well-formed text that violates a model invariant."""


@dataclass(frozen=True)
class Interval:
    """Closed dwell-time interval [lo, hi]; hi may be ``math.inf``."""

    lo: float
    hi: float

    def __post_init__(self):
        if math.isnan(self.lo) or math.isnan(self.hi):
            raise ModelValidationError("interval bounds must not be NaN")
        if not 0.0 <= self.lo <= self.hi:
            raise ModelValidationError(
                f"bad interval [{format_number(self.lo)}, {format_number(self.hi)}]: need 0 <= lo <= hi"
            )

    def contains(self, t: float) -> bool:
        return self.lo <= t <= self.hi

    def __str__(self) -> str:
        return f"[{format_number(self.lo)}, {format_number(self.hi)}]"


@dataclass(frozen=True)
class State:
    id: str
    labels: frozenset[str] = field(default_factory=frozenset)


@dataclass(frozen=True)
class Transition:
    """A directed edge with a dwell interval and, in probabilistic models, a weight."""

    source: str
    target: str
    interval: Interval
    probability: float | None = None

    def __str__(self) -> str:
        prob = f" p={format_number(self.probability)}" if self.probability is not None else ""
        return f"{self.source} -> {self.target} {self.interval}{prob}"


def _check_states(states: tuple[State, ...]) -> None:
    if not states:
        raise ModelValidationError("a model needs at least one state")
    seen = set()
    for s in states:
        if s.id in seen:
            raise ModelValidationError(f"duplicate state id {s.id!r}")
        seen.add(s.id)


@dataclass(frozen=True)
class RealTimeAutomaton:
    """Finite automaton whose transitions each carry a dwell interval.

    There are no initial/accepting markers: every state is both. The single
    implicit clock is reset by every transition, which is why a transition's
    interval constrains only its own dwell time.
    """

    states: tuple[State, ...]
    transitions: tuple[Transition, ...]

    def __post_init__(self):
        _check_states(self.states)
        ids = {s.id for s in self.states}
        seen = set()
        for t in self.transitions:
            if t.source not in ids:
                raise ModelValidationError(f"transition references undeclared state {t.source!r}")
            if t.target not in ids:
                raise ModelValidationError(f"transition references undeclared state {t.target!r}")
            if t.probability is not None:
                raise ModelValidationError("plain models must not carry transition probabilities")
            key = (t.source, t.target, t.interval)
            if key in seen:
                raise ModelValidationError(f"duplicate transition {t.source} -> {t.target} {t.interval}")
            seen.add(key)

    @property
    def propositions(self) -> frozenset[str]:
        return frozenset().union(*(s.labels for s in self.states))

    def labels_of(self, state_id: str) -> frozenset[str]:
        for s in self.states:
            if s.id == state_id:
                return s.labels
        raise ModelValidationError(f"unknown state id {state_id!r}")


@dataclass(frozen=True)
class ProbabilisticRealTimeAutomaton:
    """Automaton whose states carry a dwell interval and an outgoing distribution.

    ``dwell`` maps every state id to its interval; ``distribution`` maps every
    state id to a target-id -> probability table with positive entries summing
    to one (within PROBABILITY_SUM_TOLERANCE).
    """

    states: tuple[State, ...]
    dwell: dict[str, Interval]
    distribution: dict[str, dict[str, float]]

    def __post_init__(self):
        _check_states(self.states)
        ids = {s.id for s in self.states}
        if set(self.dwell) != ids:
            raise ModelValidationError("exactly one dwell interval per state is required")
        if set(self.distribution) != ids:
            raise ModelValidationError("every state needs an outgoing distribution")
        for sid, dist in self.distribution.items():
            if not dist:
                raise ModelValidationError(f"state {sid!r} has an empty distribution")
            for target, p in dist.items():
                if target not in ids:
                    raise ModelValidationError(f"distribution of {sid!r} references undeclared state {target!r}")
                if not 0.0 < p <= 1.0:
                    raise ModelValidationError(f"probability {p!r} on {sid} -> {target} is outside (0, 1]")
            total = math.fsum(dist.values())
            if abs(total - 1.0) > PROBABILITY_SUM_TOLERANCE:
                raise ModelValidationError(f"probabilities out of state {sid!r} sum to {total!r}, not 1")

    @property
    def propositions(self) -> frozenset[str]:
        return frozenset().union(*(s.labels for s in self.states))

    def labels_of(self, state_id: str) -> frozenset[str]:
        for s in self.states:
            if s.id == state_id:
                return s.labels
        raise ModelValidationError(f"unknown state id {state_id!r}")


Model = RealTimeAutomaton | ProbabilisticRealTimeAutomaton


def strip_probabilities(m: ProbabilisticRealTimeAutomaton) -> RealTimeAutomaton:
    """Forget the probabilities: one plain transition per positive-mass edge.

    Each produced transition inherits the dwell interval of its source state,
    so the timing behavior of the stripped automaton is unchanged.
    """
    transitions = []
    for s in m.states:
        for target in m.distribution[s.id]:
            transitions.append(Transition(s.id, target, m.dwell[s.id]))
    return RealTimeAutomaton(states=m.states, transitions=tuple(transitions))


def successors(m: Model, state_id: str) -> list[Transition]:
    """All transitions leaving ``state_id``, in declaration order."""
    if isinstance(m, RealTimeAutomaton):
        if all(s.id != state_id for s in m.states):
            raise ModelValidationError(f"unknown state id {state_id!r}")
        return [t for t in m.transitions if t.source == state_id]
    if state_id not in m.distribution:
        raise ModelValidationError(f"unknown state id {state_id!r}")
    interval = m.dwell[state_id]
    return [
        Transition(state_id, target, interval, probability=p)
        for target, p in m.distribution[state_id].items()
    ]


def all_transitions(m: Model) -> list[Transition]:
    if isinstance(m, RealTimeAutomaton):
        return list(m.transitions)
    return [t for s in m.states for t in successors(m, s.id)]


def is_behavior(m: Model, seq: list[Transition] | tuple[Transition, ...]) -> bool:
    """True iff ``seq`` is a nonempty chain of m's transitions with matching ends."""
    if not seq:
        return False
    known = set(all_transitions(m))
    for t in seq:
        if t not in known:
            raise ModelValidationError(f"transition {t} does not belong to the model")
    return all(a.target == b.source for a, b in zip(seq, seq[1:]))


def _parse_interval(ts: TokenStream) -> Interval:
    ts.next(kind="[")
    lo = float(ts.next(kind="number", what="interval lower bound").text)
    ts.next(kind=",")
    tok = ts.peek()
    if tok is not None and tok.kind == "ident" and tok.text == "inf":
        ts.next()
        hi = math.inf
    else:
        hi = float(ts.next(kind="number", what="interval upper bound or 'inf'").text)
    ts.next(kind="]")
    return Interval(lo, hi)


def parse_model(text: str) -> Model:
    """Parse model text into a validated automaton.

    The kind (plain vs probabilistic) is inferred from the transition lines;
    mixing both forms is rejected. Raises ModelSyntaxError with line/column
    for malformed text and ModelValidationError for structural violations.
    """
    states: list[State] = []
    state_lines: dict[str, int] = {}
    plain_trans: list[tuple[int, Transition]] = []
    prob_trans: list[tuple[int, str, str, float]] = []
    dwells: dict[str, tuple[int, Interval]] = {}

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].rstrip()
        if not line.strip():
            continue
        tokens = tokenize(line, lineno, ModelSyntaxError)
        ts = TokenStream(tokens, lineno, ModelSyntaxError, len(line))
        head = ts.next(kind="ident", what="'state', 'trans' or 'dwell'")
        if head.text == "state":
            sid = ts.next(kind="ident", what="state id").text
            labels: list[str] = []
            if ts.accept(kind="ident", text="labels"):
                labels.append(ts.next(kind="ident", what="proposition name").text)
                while ts.accept(kind=","):
                    labels.append(ts.next(kind="ident", what="proposition name").text)
            ts.expect_end()
            if sid in state_lines:
                raise ModelValidationError(f"line {lineno}: duplicate state id {sid!r}")
            state_lines[sid] = lineno
            states.append(State(sid, frozenset(labels)))
        elif head.text == "trans":
            src = ts.next(kind="ident", what="source state id").text
            ts.next(kind="arrow")
            dst = ts.next(kind="ident", what="target state id").text
            nxt = ts.peek()
            if nxt is not None and nxt.kind == "ident" and nxt.text == "prob":
                ts.next()
                p = float(ts.next(kind="number", what="probability").text)
                ts.expect_end()
                prob_trans.append((lineno, src, dst, p))
            else:
                try:
                    interval = _parse_interval(ts)
                except ModelValidationError as exc:
                    raise ModelValidationError(f"line {lineno}: {exc}") from None
                ts.expect_end()
                plain_trans.append((lineno, Transition(src, dst, interval)))
        elif head.text == "dwell":
            sid = ts.next(kind="ident", what="state id").text
            try:
                interval = _parse_interval(ts)
            except ModelValidationError as exc:
                raise ModelValidationError(f"line {lineno}: {exc}") from None
            ts.expect_end()
            if sid in dwells:
                raise ModelValidationError(f"line {lineno}: duplicate dwell for state {sid!r}")
            dwells[sid] = (lineno, interval)
        else:
            raise ModelSyntaxError(
                f"expected 'state', 'trans' or 'dwell', found {head.text!r}", lineno, head.column
            )

    if not states:
        raise ModelValidationError("a model needs at least one state")
    ids = set(state_lines)

    probabilistic = bool(prob_trans) or bool(dwells)
    if probabilistic and plain_trans:
        lineno = plain_trans[0][0]
        raise ModelValidationError(
            f"line {lineno}: plain transitions cannot be mixed with 'prob'/'dwell' lines"
        )

    if not probabilistic:
        for lineno, t in plain_trans:
            for sid in (t.source, t.target):
                if sid not in ids:
                    raise ModelValidationError(f"line {lineno}: undeclared state {sid!r}")
        try:
            return RealTimeAutomaton(tuple(states), tuple(t for _, t in plain_trans))
        except ModelValidationError as exc:
            raise ModelValidationError(str(exc)) from None

    distribution: dict[str, dict[str, float]] = {s.id: {} for s in states}
    for lineno, src, dst, p in prob_trans:
        for sid in (src, dst):
            if sid not in ids:
                raise ModelValidationError(f"line {lineno}: undeclared state {sid!r}")
        if not 0.0 < p <= 1.0:
            raise ModelValidationError(f"line {lineno}: probability {p!r} is outside (0, 1]")
        if dst in distribution[src]:
            raise ModelValidationError(f"line {lineno}: duplicate transition {src} -> {dst}")
        distribution[src][dst] = p
    for sid, (lineno, _) in dwells.items():
        if sid not in ids:
            raise ModelValidationError(f"line {lineno}: undeclared state {sid!r}")
    for s in states:
        if s.id not in dwells:
            raise ModelValidationError(f"state {s.id!r} has no dwell interval")
        if not distribution[s.id]:
            raise ModelValidationError(f"state {s.id!r} has no outgoing 'prob' transitions")
        total = math.fsum(distribution[s.id].values())
        if abs(total - 1.0) > PROBABILITY_SUM_TOLERANCE:
            raise ModelValidationError(
                f"probabilities out of state {s.id!r} sum to {total!r}, not 1"
            )
    return ProbabilisticRealTimeAutomaton(
        states=tuple(states),
        dwell={sid: iv for sid, (_, iv) in dwells.items()},
        distribution=distribution,
    )


def render_model(m: Model) -> str:
    """Serialize a model; ``parse_model(render_model(m)) == m``."""
    lines = []
    for s in m.states:
        if s.labels:
            lines.append(f"state {s.id} labels {','.join(sorted(s.labels))}")
        else:
            lines.append(f"state {s.id}")
    if isinstance(m, RealTimeAutomaton):
        for t in m.transitions:
            lines.append(f"trans {t.source} -> {t.target} {t.interval}")
    else:
        for s in m.states:
            lines.append(f"dwell {s.id} {m.dwell[s.id]}")
        for s in m.states:
            for target, p in m.distribution[s.id].items():
                lines.append(f"trans {s.id} -> {target} prob {format_number(p)}")
    return "\n".join(lines) + "\n"

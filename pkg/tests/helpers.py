"""Shared test utilities: independent oracles and random instance generators."""

from __future__ import annotations

import itertools
import math
import random

from durcheck import (
    Interval,
    LinearDurationInvariant,
    MarkovChain,
    RealTimeAutomaton,
    State,
    Transition,
)


def endpoint_lp_max(w, lo, hi, window_lo, window_hi):
    """Brute-force maximum of w.t over the box intersected with the length window.

    Independent check for the greedy maximizer: a linear objective attains
    its maximum at a vertex, and every vertex either sits on box endpoints
    everywhere or has exactly one coordinate interior, pinned by the coupling
    constraint sum(t) = window_lo or window_hi. Requires finite box bounds.
    Returns None when no vertex is feasible.
    """
    n = len(w)
    best = None

    def consider(t):
        nonlocal best
        total = math.fsum(t)
        if window_lo - 1e-12 <= total <= window_hi + 1e-12:
            value = math.fsum(wj * tj for wj, tj in zip(w, t))
            if best is None or value > best:
                best = value

    for bits in itertools.product((0, 1), repeat=n):
        t = [hi[j] if bit else lo[j] for j, bit in enumerate(bits)]
        consider(t)
        partial = math.fsum(t)
        for j in range(n):
            rest = partial - t[j]
            for target in (window_lo, window_hi):
                if math.isinf(target):
                    continue
                tj = target - rest
                if lo[j] - 1e-12 <= tj <= hi[j] + 1e-12:
                    candidate = list(t)
                    candidate[j] = min(max(tj, lo[j]), hi[j])
                    consider(candidate)
    return best


def enumerate_sequences(m: RealTimeAutomaton, max_len: int):
    """All transition sequences of the automaton with at most max_len steps."""
    outgoing = {s.id: [t for t in m.transitions if t.source == s.id] for s in m.states}
    stack = [(t,) for t in reversed(m.transitions)]
    while stack:
        seq = stack.pop()
        yield seq
        if len(seq) < max_len:
            for t in reversed(outgoing[seq[-1].target]):
                stack.append(seq + (t,))


def random_plain_model(rng: random.Random, n_states: int = 3) -> RealTimeAutomaton:
    """Small random automaton with finite intervals and two propositions.

    The first two states always carry "p" and "r" so random invariants over
    that alphabet bind against every generated model.
    """
    ids = [f"q{i}" for i in range(n_states)]
    states = []
    for i, sid in enumerate(ids):
        if i == 0:
            labels = frozenset({"p"})
        elif i == 1:
            labels = frozenset({"r"})
        else:
            labels = frozenset(rng.sample(["p", "r"], rng.randint(0, 2)))
        states.append(State(sid, labels))
    states = tuple(states)
    transitions = []
    seen = set()
    for sid in ids:
        for _ in range(rng.randint(1, 3)):
            target = rng.choice(ids)
            lo = round(rng.uniform(0.0, 5.0), 3)
            hi = round(lo + rng.uniform(0.0, 4.0), 3)
            key = (sid, target, lo, hi)
            if key in seen:
                continue
            seen.add(key)
            transitions.append(Transition(sid, target, Interval(lo, hi)))
    return RealTimeAutomaton(states, tuple(transitions))


def random_invariant(rng: random.Random) -> LinearDurationInvariant:
    lo = round(rng.uniform(0.0, 8.0), 3)
    hi = math.inf if rng.random() < 0.3 else round(lo + rng.uniform(0.0, 12.0), 3)
    terms = tuple(
        (round(rng.uniform(-5.0, 5.0), 3), prop) for prop in ("p", "r") if rng.random() < 0.9
    )
    if not terms:
        terms = ((1.0, "p"),)
    return LinearDurationInvariant(lo, hi, terms, round(rng.uniform(-10.0, 10.0), 3))


def random_chain(rng: random.Random, n_states: int | None = None) -> MarkovChain:
    """Dense random chain; every entry at least ~0.15 before normalization."""
    n = n_states if n_states is not None else rng.randint(3, 5)
    ids = tuple(f"c{i}" for i in range(n))
    matrix = {}
    for sid in ids:
        raw = [0.15 + rng.random() for _ in ids]
        total = math.fsum(raw)
        matrix[sid] = {target: weight / total for target, weight in zip(ids, raw)}
    return MarkovChain(ids, matrix)


def random_patterns(rng: random.Random, chain: MarkovChain, count: int, max_len: int = 4):
    """Random positive-probability walks of 2..max_len states."""
    patterns = []
    for _ in range(count):
        length = rng.randint(2, max_len)
        walk = [rng.choice(chain.states)]
        for _ in range(length - 1):
            row = chain.matrix[walk[-1]]
            targets = [t for t, p in row.items() if p > 0]
            walk.append(rng.choice(targets))
        patterns.append(tuple(walk))
    return patterns

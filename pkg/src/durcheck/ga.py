"""Genetic search for behaviors that break a duration invariant.

Individuals are time-stamped behaviors; fitness is the weighted duration sum
the invariant bounds. The loop evaluates a population, stops with a violation
verdict as soon as some individual beats the bound, and otherwise breeds the
next generation with suffix-swapping crossover and dwell-redraw mutation,
keeping a slice of elites unchanged. Runs are fully deterministic from their
seed.
"""

from __future__ import annotations

import itertools
import math
import random
from dataclasses import dataclass, replace

from .automaton import Interval, RealTimeAutomaton, successors
from .formula import LinearDurationInvariant
from .semantics import (
    DEFAULT_TOLERANCE,
    TimeStampedBehavior,
    behavior_length,
    lf_value,
    state_weights,
)

VERDICT_VIOLATED = "violated"
VERDICT_NO_VIOLATION = "no-violation-found"

SETTLE_EPSILON = 1e-12
SAMPLE_ATTEMPTS = 200


class InfeasibleModelError(RuntimeError):
    """No behavior with the required length window could be sampled."""


@dataclass(frozen=True)
class GaConfig:
    population_size: int = 90
    p_mutation: float = 0.2
    p_cut_splice: float = 0.5
    max_generations: int = 50
    settle_window: int = 10
    seed: int = 0
    max_genes: int = 8
    time_cap: float | None = None
    runs: int = 10
    elite_fraction: float = 0.1

    def __post_init__(self):
        if self.population_size < 2:
            raise ValueError("population_size must be at least 2")
        if not 0.0 <= self.p_mutation <= 1.0 or not 0.0 <= self.p_cut_splice <= 1.0:
            raise ValueError("operator probabilities must lie in [0, 1]")
        if self.max_genes < 1:
            raise ValueError("max_genes must be at least 1")
        if self.time_cap is not None and self.time_cap <= 0:
            raise ValueError("time_cap must be positive")
        if self.settle_window < 1:
            raise ValueError("settle_window must be at least 1")
        if self.max_generations < 1:
            raise ValueError("max_generations must be at least 1")
        if self.runs < 1:
            raise ValueError("runs must be at least 1")
        if not 0.0 < self.elite_fraction < 1.0:
            raise ValueError("elite_fraction must lie strictly between 0 and 1")


@dataclass(frozen=True)
class GaReport:
    verdict: str
    best_value: float
    best_individual: TimeStampedBehavior | None
    counterexamples: tuple[TimeStampedBehavior, ...]
    generations_run: int
    fitness_trace: tuple[float, ...]


def capped_hi(interval: Interval, d: LinearDurationInvariant, time_cap: float | None) -> float:
    """Finite stand-in for an unbounded dwell interval during sampling.

    Chromosome genes must carry finite dwells; intervals open to infinity are
    truncated at lo + time_cap, or, when no cap is configured, at a default
    wide enough to clear the invariant's length window from a single gene.
    """
    if not math.isinf(interval.hi):
        return interval.hi
    if time_cap is not None:
        return interval.lo + time_cap
    base = d.max_length if not math.isinf(d.max_length) else d.min_length
    return max(base, interval.lo) + 2.0 * max(d.min_length, 1.0)


def _redistribute(
    dwells: list[float],
    lows: list[float],
    highs: list[float],
    window_lo: float,
    window_hi: float,
    rng: random.Random,
) -> list[float] | None:
    """Clamp the dwell total into [window_lo, window_hi] and re-allocate it.

    The drawn dwells fix a tentative total; the total is clamped into the
    window and then realized the way the exact maximizer allocates mass, but
    with a uniformly shuffled raising order instead of a weight-directed one:
    every dwell restarts at its lower bound and random coordinates are raised
    to their (capped) upper bounds, the last one partially, until the clamped
    total is met. Samples therefore sit on corners of the dwell box, which is
    where a linear objective attains its optima. Returns None when no
    allocation can reach the window.
    """
    lo_total = math.fsum(lows)
    if lo_total > window_hi or math.fsum(highs) < window_lo:
        return None
    target = min(max(math.fsum(dwells), window_lo), window_hi)
    fresh = list(lows)
    total = lo_total
    order = list(range(len(fresh)))
    rng.shuffle(order)
    for j in order:
        missing = target - total
        if missing <= 0:
            break
        step = min(highs[j] - fresh[j], missing)
        fresh[j] += step
        total += step
    return fresh


def start_states(m: RealTimeAutomaton) -> list[str]:
    """States with at least one outgoing transition, in declaration order."""
    return [s.id for s in m.states if any(t.source == s.id for t in m.transitions)]


def sample_behavior(
    m: RealTimeAutomaton,
    d: LinearDurationInvariant,
    cfg: GaConfig,
    rng: random.Random,
    start: str | None = None,
    attempts: int = SAMPLE_ATTEMPTS,
) -> TimeStampedBehavior:
    """Random behavior whose length lands inside the invariant's window.

    Walks the transition graph from ``start`` (or a uniformly chosen starting
    state) for a uniformly drawn number of steps, draws each dwell uniformly
    from its (capped) interval, clamps the drawn total into the window and
    re-allocates it over the genes in random order. Retries with fresh walks
    up to ``attempts`` times before declaring the model infeasible.
    """
    if not m.transitions:
        raise InfeasibleModelError("the model has no transitions to walk")
    starts = start_states(m)
    outgoing = {s.id: successors(m, s.id) for s in m.states}
    if start is not None and not outgoing[start]:
        raise InfeasibleModelError(f"state {start!r} has no outgoing transitions")
    for _ in range(attempts):
        origin = start if start is not None else starts[rng.randrange(len(starts))]
        length = rng.randint(1, cfg.max_genes)
        seq = []
        cur = origin
        for _ in range(length):
            succ = outgoing[cur]
            if not succ:
                break
            t = succ[rng.randrange(len(succ))]
            seq.append(t)
            cur = t.target
        if not seq:
            continue
        lows = [t.interval.lo for t in seq]
        highs = [capped_hi(t.interval, d, cfg.time_cap) for t in seq]
        dwells = [rng.uniform(lo, hi) for lo, hi in zip(lows, highs)]
        repaired = _redistribute(dwells, lows, highs, d.min_length, d.max_length, rng)
        if repaired is None:
            continue
        return TimeStampedBehavior(tuple(zip(seq, repaired)))
    raise InfeasibleModelError(
        f"no behavior with length in [{d.min_length}, {d.max_length}] found "
        f"in {attempts} attempts (max_genes={cfg.max_genes})"
    )


def mutate(
    b: TimeStampedBehavior,
    d: LinearDurationInvariant,
    cfg: GaConfig,
    rng: random.Random,
) -> TimeStampedBehavior:
    """Redraw the dwell of one or more genes; the transition chain is untouched.

    The number of redrawn genes is geometric with parameter 1/2, capped at
    the gene count.
    """
    genes = list(b.genes)
    count = 1
    while count < len(genes) and rng.random() < 0.5:
        count += 1
    for i in rng.sample(range(len(genes)), count):
        t, _ = genes[i]
        genes[i] = (t, rng.uniform(t.interval.lo, capped_hi(t.interval, d, cfg.time_cap)))
    return TimeStampedBehavior(tuple(genes))


def cut_and_splice(
    x: TimeStampedBehavior, y: TimeStampedBehavior, rng: random.Random
) -> tuple[TimeStampedBehavior, TimeStampedBehavior] | None:
    """Swap the suffixes of two behaviors after a uniformly chosen shared gene.

    A shared gene means the same transition (dwells may differ); the shared
    target guarantees both children are chains. Returns None when the parents
    have no transition in common, in which case callers fall back to mutation.
    """
    where_in_x: dict = {}
    for i, (t, _) in enumerate(x.genes):
        where_in_x.setdefault(t, []).append(i)
    positions = [
        (i, j)
        for j, (u, _) in enumerate(y.genes)
        for i in where_in_x.get(u, ())
    ]
    if not positions:
        return None
    i, j = positions[rng.randrange(len(positions))]
    first = TimeStampedBehavior(x.genes[: i + 1] + y.genes[j + 1 :])
    second = TimeStampedBehavior(y.genes[: j + 1] + x.genes[i + 1 :])
    return first, second


def _breed(
    population: list[TimeStampedBehavior],
    d: LinearDurationInvariant,
    cfg: GaConfig,
    rng: random.Random,
) -> list[TimeStampedBehavior]:
    """Crossover over shuffled pairs, then a mutation pass over every individual."""
    n = len(population)
    order = list(range(n))
    rng.shuffle(order)
    offspring = [population[i] for i in order]
    for a in range(0, n - 1, 2):
        b = a + 1
        if rng.random() < cfg.p_cut_splice:
            children = cut_and_splice(offspring[a], offspring[b], rng)
            if children is None:
                offspring[a] = mutate(offspring[a], d, cfg, rng)
                offspring[b] = mutate(offspring[b], d, cfg, rng)
            else:
                offspring[a], offspring[b] = children
    for i in range(n):
        if rng.random() < cfg.p_mutation:
            offspring[i] = mutate(offspring[i], d, cfg, rng)
    return offspring


def run_ga(
    m: RealTimeAutomaton,
    d: LinearDurationInvariant,
    cfg: GaConfig,
    *,
    harvest: bool = False,
    tol: float = DEFAULT_TOLERANCE,
    on_generation=None,
) -> GaReport:
    """One seeded, deterministic search run.

    Stops with a violated verdict as soon as some individual's value beats
    the bound (with ``harvest=True`` it records every violator it sees and
    keeps evolving instead), and otherwise when the best fitness has not
    moved for ``settle_window`` generations or the generation cap is hit.
    Every individual of every generation lies inside the length window.
    """
    state_weights(m, d)  # binding check before any sampling work
    rng = random.Random(cfg.seed)
    start_cycle = itertools.cycle(start_states(m))
    population = [
        sample_behavior(m, d, cfg, rng, start=next(start_cycle))
        for _ in range(cfg.population_size)
    ]

    best_value = -math.inf
    best_individual: TimeStampedBehavior | None = None
    trace: list[float] = []
    violations: dict[tuple, TimeStampedBehavior] = {}
    elite_count = math.ceil(cfg.elite_fraction * cfg.population_size)

    for generation in range(cfg.max_generations):
        fitness = [lf_value(m, d, b) for b in population]
        for b, f in zip(population, fitness):
            if f > best_value or (f == best_value and b.sort_key() < best_individual.sort_key()):
                best_value = f
                best_individual = b
        trace.append(max(fitness))
        if on_generation is not None:
            on_generation(generation, tuple(population), tuple(fitness))

        found = [
            b
            for b, f in zip(population, fitness)
            if f > d.bound + tol and d.min_length <= behavior_length(b) <= d.max_length
        ]
        for b in found:
            violations.setdefault(b.sort_key(), b)
        if found and not harvest:
            break
        if (
            len(trace) > cfg.settle_window
            and trace[-1] - trace[-1 - cfg.settle_window] < SETTLE_EPSILON
        ):
            break
        if generation == cfg.max_generations - 1:
            break

        offspring = _breed(population, d, cfg, rng)
        kept = [
            b for b in offspring if d.min_length <= behavior_length(b) <= d.max_length
        ]
        while len(kept) < cfg.population_size:
            kept.append(sample_behavior(m, d, cfg, rng, start=next(start_cycle)))
        kept_fitness = [lf_value(m, d, b) for b in kept]
        by_weakness = sorted(
            range(len(kept)), key=lambda i: (kept_fitness[i], kept[i].sort_key())
        )
        # Elites are the best distinct individuals; without the dedupe a
        # single specimen's clones can occupy every preserved slot.
        elites = []
        seen_keys = set()
        for f, b in sorted(
            zip(fitness, population), key=lambda pair: (-pair[0], pair[1].sort_key())
        ):
            key = b.sort_key()
            if key not in seen_keys:
                seen_keys.add(key)
                elites.append(b)
            if len(elites) == elite_count:
                break
        population = [kept[i] for i in by_weakness[len(elites) :]] + elites

    return GaReport(
        verdict=VERDICT_VIOLATED if violations else VERDICT_NO_VIOLATION,
        best_value=best_value,
        best_individual=best_individual,
        counterexamples=tuple(violations.values()),
        generations_run=len(trace),
        fitness_trace=tuple(trace),
    )


def run_ga_batch(
    m: RealTimeAutomaton,
    d: LinearDurationInvariant,
    cfg: GaConfig,
    *,
    harvest: bool = False,
    tol: float = DEFAULT_TOLERANCE,
) -> list[GaReport]:
    """Independent runs with seeds seed, seed+1, ..., seed+runs-1."""
    return [
        run_ga(m, d, replace(cfg, seed=cfg.seed + i), harvest=harvest, tol=tol)
        for i in range(cfg.runs)
    ]


def check_ldi(
    m: RealTimeAutomaton,
    d: LinearDurationInvariant,
    cfg: GaConfig,
    *,
    harvest: bool = False,
    tol: float = DEFAULT_TOLERANCE,
) -> GaReport:
    """Aggregate of ``cfg.runs`` seeded runs: max best value, union of violations."""
    reports = run_ga_batch(m, d, cfg, harvest=harvest, tol=tol)
    best = max(reports, key=lambda r: r.best_value)
    merged: dict[tuple, TimeStampedBehavior] = {}
    for report in reports:
        for ce in report.counterexamples:
            merged.setdefault(ce.sort_key(), ce)
    return GaReport(
        verdict=VERDICT_VIOLATED if merged else VERDICT_NO_VIOLATION,
        best_value=best.best_value,
        best_individual=best.best_individual,
        counterexamples=tuple(merged.values()),
        generations_run=sum(r.generations_run for r in reports),
        fitness_trace=best.fitness_trace,
    )

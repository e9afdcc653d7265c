"""Counterexample harvesting, pattern reduction, and the probabilistic verdict."""

import dataclasses
import random

import pytest

import durcheck
from durcheck import (
    GaConfig,
    PathPattern,
    PatternSet,
    TimeStampedBehavior,
    avoidance_probability,
    check_pldi,
    collect_counterexamples,
    generalize_patterns,
    minimize_patterns,
    parse_ldi,
    parse_model,
    satisfies_ldi,
    strip_probabilities,
    strip_and_dedupe,
)
from durcheck.pldi import behavior_pattern, shared_core

from helpers import random_chain, random_patterns

GOOD = dict(population_size=100, p_mutation=0.1, p_cut_splice=0.6,
            max_generations=50, settle_window=50)


@pytest.fixture(scope="module")
def harvest_cfg():
    return GaConfig(seed=10, runs=3, **GOOD)


class TestPatterns:
    def test_needs_two_states(self):
        with pytest.raises(ValueError):
            PathPattern(("s1",))

    def test_contains_contiguous_only(self):
        outer = PathPattern(("a", "b", "c", "d"))
        assert outer.contains(PathPattern(("b", "c")))
        assert not outer.contains(PathPattern(("a", "c")))
        assert not PathPattern(("a", "b")).contains(outer)

    def test_pattern_set_rejects_nested_members(self):
        with pytest.raises(ValueError):
            PatternSet(frozenset({PathPattern(("a", "b", "c")), PathPattern(("b", "c"))}))

    def test_behavior_pattern(self, gas_prta):
        stripped = strip_probabilities(gas_prta)
        t = {(x.source, x.target): x for x in stripped.transitions}
        b = TimeStampedBehavior(((t[("s2", "s2")], 0.5), (t[("s2", "s1")], 0.5)))
        assert behavior_pattern(b).states == ("s2", "s2", "s1")


class TestStripAndDedupe:
    def test_timing_collapses(self, gas_prta):
        stripped = strip_probabilities(gas_prta)
        t = {(x.source, x.target): x for x in stripped.transitions}
        b1 = TimeStampedBehavior(((t[("s2", "s2")], 0.25),))
        b2 = TimeStampedBehavior(((t[("s2", "s2")], 0.75),))
        assert strip_and_dedupe([b1, b2]) == {PathPattern(("s2", "s2"))}

    def test_empty(self):
        assert strip_and_dedupe([]) == set()


class TestMinimize:
    def test_superpattern_dropped(self):
        w = minimize_patterns(
            {PathPattern(("s1", "s2", "s2", "s2", "s1")), PathPattern(("s2", "s2", "s2"))}
        )
        assert w.patterns == frozenset({PathPattern(("s2", "s2", "s2"))})

    def test_incomparable_patterns_retained(self):
        four = {
            PathPattern(("s2", "s2", "s2", "s1", "s1")),
            PathPattern(("s2", "s2", "s2", "s1", "s2")),
            PathPattern(("s1", "s2", "s2", "s2", "s1")),
            PathPattern(("s1", "s2", "s2", "s2", "s2")),
        }
        assert minimize_patterns(four).patterns == frozenset(four)

    def test_singleton_unchanged(self):
        one = {PathPattern(("a", "b"))}
        assert minimize_patterns(one).patterns == frozenset(one)

    def test_neutral_for_avoidance(self):
        rng = random.Random(41)
        for _ in range(30):
            chain = random_chain(rng)
            raw = [PathPattern(p) for p in random_patterns(rng, chain, 3)]
            minimized = minimize_patterns(raw)
            before = avoidance_probability(chain, raw).per_state
            after = avoidance_probability(chain, minimized).per_state
            for state in chain.states:
                assert before[state] == pytest.approx(after[state], abs=1e-9)


class TestCollect:
    def test_gas_burner_yields_violations(self, gas_prta, gas_ldi, harvest_cfg):
        ces = collect_counterexamples(gas_prta, gas_ldi, harvest_cfg, max_len=8)
        assert len(ces) > 100
        stripped = strip_probabilities(gas_prta)
        for ce in ces[:50]:
            assert not satisfies_ldi(stripped, gas_ldi, ce)

    def test_trivially_true_spec_collects_nothing(self, gas_prta, gas_ldi, harvest_cfg):
        easy = dataclasses.replace(gas_ldi, bound=1e9)
        assert collect_counterexamples(gas_prta, easy, harvest_cfg, max_len=8) == []

    def test_deterministic(self, gas_prta, gas_ldi):
        cfg = GaConfig(seed=2, runs=1, **GOOD)
        first = collect_counterexamples(gas_prta, gas_ldi, cfg, max_len=6)
        second = collect_counterexamples(gas_prta, gas_ldi, cfg, max_len=6)
        assert first == second


class TestCheckPldi:
    def test_gas_burner_violated(self, gas_prta, gas_pldi, harvest_cfg):
        report = check_pldi(gas_prta, gas_pldi, harvest_cfg, max_len=8)
        assert report.verdict == "violated"
        assert report.min_probability == 0.0
        assert report.per_state_probability == {"s1": 0.0, "s2": 0.0}
        assert len(report.pattern_set) >= 1
        assert report.counterexample_count > 100
        assert report.avoidance is not None

    def test_zero_threshold_satisfied(self, gas_prta, gas_pldi, harvest_cfg):
        zero = dataclasses.replace(gas_pldi, threshold=0.0)
        report = check_pldi(gas_prta, zero, harvest_cfg, max_len=8)
        assert report.verdict == "satisfied-approximately"
        assert report.min_probability == 0.0

    def test_trivially_true_spec(self, gas_prta, gas_pldi, harvest_cfg):
        easy = dataclasses.replace(
            gas_pldi, ldi=dataclasses.replace(gas_pldi.ldi, bound=1e9)
        )
        report = check_pldi(gas_prta, easy, harvest_cfg, max_len=8)
        assert report.verdict == "satisfied-approximately"
        assert report.per_state_probability == {"s1": 1.0, "s2": 1.0}
        assert report.counterexample_count == 0

    def test_patterns_backed_by_counterexamples(self, gas_prta, gas_pldi, harvest_cfg):
        report = check_pldi(gas_prta, gas_pldi, harvest_cfg, max_len=8)
        harvested = set()
        for ga_report in report.ga_reports:
            for ce in ga_report.counterexamples:
                harvested.add(behavior_pattern(ce))
        for pattern in report.pattern_set.patterns:
            assert pattern in harvested


class TestGeneralize:
    def test_shared_core(self):
        w = minimize_patterns(
            {PathPattern(("a", "b", "c")), PathPattern(("b", "c", "a"))}
        )
        assert shared_core(w) == PathPattern(("b", "c"))

    def test_core_adopted_when_every_carrier_violates(self):
        # Any behavior violates: zero-duration bound with a negative target.
        m = parse_model(
            "state x labels P\nstate y labels Q\nstate z labels P\n"
            "trans x -> y [1, 2]\ntrans y -> z [1, 2]\ntrans z -> x [1, 2]\n"
        )
        d = parse_ldi("ell >= 0 -> 0*int(P) <= -1")
        w = minimize_patterns({PathPattern(("x", "y", "z")), PathPattern(("y", "z", "x"))})
        generalized = generalize_patterns(w, m, d, max_len=4)
        assert generalized.patterns == frozenset({PathPattern(("y", "z"))})

    def test_core_rejected_on_gas_burner(self, gas_prta, gas_ldi):
        stripped = strip_probabilities(gas_prta)
        w = minimize_patterns(
            {
                PathPattern(("s2", "s2", "s2", "s1", "s1")),
                PathPattern(("s1", "s2", "s2", "s2", "s2")),
            }
        )
        # The shared core s2 s2 s2 admits padded carriers with no violating
        # timing, so the set must come back unchanged.
        assert generalize_patterns(w, stripped, gas_ldi, max_len=8) == w

    def test_singleton_returned_as_is(self, gas_prta, gas_ldi):
        stripped = strip_probabilities(gas_prta)
        w = PatternSet(frozenset({PathPattern(("s2", "s2"))}))
        assert generalize_patterns(w, stripped, gas_ldi, max_len=4) == w

"""Model parsing, validation, rendering, and structural queries."""

import math
import random

import pytest

from durcheck import (
    Interval,
    ModelSyntaxError,
    ModelValidationError,
    ProbabilisticRealTimeAutomaton,
    RealTimeAutomaton,
    State,
    Transition,
    is_behavior,
    parse_model,
    render_model,
    strip_probabilities,
    successors,
)

from helpers import random_plain_model


def test_parse_gas_burner(gas_rta):
    assert isinstance(gas_rta, RealTimeAutomaton)
    assert [s.id for s in gas_rta.states] == ["s1", "s2"]
    assert gas_rta.labels_of("s1") == frozenset({"NLeak"})
    assert gas_rta.labels_of("s2") == frozenset({"Leak"})
    assert len(gas_rta.transitions) == 2
    assert gas_rta.transitions[0] == Transition("s1", "s2", Interval(30.0, math.inf))
    assert gas_rta.transitions[1] == Transition("s2", "s1", Interval(0.0, 1.0))
    assert gas_rta.propositions == frozenset({"Leak", "NLeak"})


def test_parse_probabilistic_gas_burner(gas_prta):
    assert isinstance(gas_prta, ProbabilisticRealTimeAutomaton)
    assert gas_prta.distribution == {
        "s1": {"s1": 0.9, "s2": 0.1},
        "s2": {"s1": 0.8, "s2": 0.2},
    }
    assert gas_prta.dwell["s1"] == Interval(30.0, math.inf)
    assert gas_prta.dwell["s2"] == Interval(0.0, 1.0)


def test_parse_minimal_model():
    m = parse_model("state only labels P\n")
    assert isinstance(m, RealTimeAutomaton)
    assert len(m.states) == 1 and not m.transitions


def test_parse_state_without_labels():
    m = parse_model("state a\nstate b labels X\ntrans a -> b [0, 1]\n")
    assert m.labels_of("a") == frozenset()


class TestParseErrors:
    def test_syntax_error_carries_position(self):
        with pytest.raises(ModelSyntaxError) as err:
            parse_model("state a labels P\ntrans a => a [0, 1]\n")
        assert err.value.line == 2
        assert err.value.column is not None

    def test_stray_character(self):
        with pytest.raises(ModelSyntaxError):
            parse_model("state a labels P!\n")

    def test_undeclared_state(self):
        with pytest.raises(ModelValidationError):
            parse_model("state a labels P\ntrans a -> ghost [0, 1]\n")

    def test_duplicate_state(self):
        with pytest.raises(ModelValidationError):
            parse_model("state a labels P\nstate a labels Q\n")

    def test_duplicate_transition_identity(self):
        text = "state a labels P\ntrans a -> a [0, 1]\ntrans a -> a [0, 1]\n"
        with pytest.raises(ModelValidationError):
            parse_model(text)

    def test_same_pair_distinct_intervals_allowed(self):
        text = "state a labels P\ntrans a -> a [0, 1]\ntrans a -> a [0, 2]\n"
        assert len(parse_model(text).transitions) == 2

    def test_interval_lo_above_hi(self):
        with pytest.raises(ModelValidationError):
            parse_model("state a labels P\ntrans a -> a [2, 1]\n")

    def test_probability_sum_violation(self):
        text = (
            "state a labels P\ndwell a [0, 1]\n"
            "trans a -> a prob 0.5\n"
        )
        with pytest.raises(ModelValidationError):
            parse_model(text)

    def test_probability_sum_tolerance(self):
        text = (
            "state a labels P\nstate b labels Q\n"
            "dwell a [0, 1]\ndwell b [0, 1]\n"
            "trans a -> a prob 0.4999999999\ntrans a -> b prob 0.5000000001\n"
            "trans b -> a prob 1\n"
        )
        m = parse_model(text)
        assert isinstance(m, ProbabilisticRealTimeAutomaton)

    def test_mixing_rejected(self):
        text = (
            "state a labels P\nstate b labels Q\n"
            "dwell a [0, 1]\ndwell b [0, 1]\n"
            "trans a -> b prob 1\ntrans b -> a [0, 1]\n"
        )
        with pytest.raises(ModelValidationError):
            parse_model(text)

    def test_missing_dwell(self):
        text = "state a labels P\ntrans a -> a prob 1\n"
        with pytest.raises(ModelValidationError):
            parse_model(text)

    def test_probability_outside_unit(self):
        text = "state a labels P\ndwell a [0, 1]\ntrans a -> a prob 1.5\n"
        with pytest.raises(ModelValidationError):
            parse_model(text)

    def test_duplicate_dwell(self):
        text = "state a labels P\ndwell a [0, 1]\ndwell a [0, 2]\ntrans a -> a prob 1\n"
        with pytest.raises(ModelValidationError):
            parse_model(text)


class TestRoundTrip:
    def test_gas_burner(self, gas_rta):
        assert parse_model(render_model(gas_rta)) == gas_rta

    def test_probabilistic(self, gas_prta):
        assert parse_model(render_model(gas_prta)) == gas_prta

    def test_random_models(self):
        rng = random.Random(2024)
        for _ in range(50):
            m = random_plain_model(rng)
            assert parse_model(render_model(m)) == m

    def test_unlabeled_state(self):
        m = parse_model("state a\n")
        assert parse_model(render_model(m)) == m


class TestStripProbabilities:
    def test_gas_burner(self, gas_prta):
        stripped = strip_probabilities(gas_prta)
        expected = [
            Transition("s1", "s1", Interval(30.0, math.inf)),
            Transition("s1", "s2", Interval(30.0, math.inf)),
            Transition("s2", "s1", Interval(0.0, 1.0)),
            Transition("s2", "s2", Interval(0.0, 1.0)),
        ]
        assert list(stripped.transitions) == expected
        assert stripped.states == gas_prta.states

    def test_identity_distribution(self):
        m = parse_model("state a labels P\ndwell a [1, 2]\ntrans a -> a prob 1\n")
        stripped = strip_probabilities(m)
        assert list(stripped.transitions) == [Transition("a", "a", Interval(1.0, 2.0))]

    def test_reannotate_preserves_skeleton(self, gas_prta):
        stripped = strip_probabilities(gas_prta)
        by_source = {}
        for t in stripped.transitions:
            by_source.setdefault(t.source, []).append(t.target)
        uniform = ProbabilisticRealTimeAutomaton(
            states=stripped.states,
            dwell={s.id: next(t.interval for t in stripped.transitions if t.source == s.id)
                   for s in stripped.states},
            distribution={src: {dst: 1.0 / len(dsts) for dst in dsts}
                          for src, dsts in by_source.items()},
        )
        again = strip_probabilities(uniform)
        assert {(t.source, t.target) for t in again.transitions} == {
            (t.source, t.target) for t in stripped.transitions
        }


class TestSuccessors:
    def test_gas_burner_s1(self, gas_rta, rho1):
        assert successors(gas_rta, "s1") == [rho1]

    def test_stripped_s2(self, gas_prta):
        stripped = strip_probabilities(gas_prta)
        assert len(successors(stripped, "s2")) == 2

    def test_probabilistic_carries_weights(self, gas_prta):
        out = successors(gas_prta, "s1")
        assert [(t.target, t.probability) for t in out] == [("s1", 0.9), ("s2", 0.1)]
        assert all(t.interval == gas_prta.dwell["s1"] for t in out)

    def test_isolated_state(self):
        m = parse_model("state a labels P\nstate b labels Q\ntrans a -> b [0, 1]\n")
        assert successors(m, "b") == []

    def test_unknown_state(self, gas_rta):
        with pytest.raises(ModelValidationError):
            successors(gas_rta, "nope")


class TestIsBehavior:
    def test_alternating_chain(self, gas_rta, rho1, rho2):
        assert is_behavior(gas_rta, [rho1, rho2, rho1])

    def test_broken_chain(self, gas_rta, rho1):
        assert not is_behavior(gas_rta, [rho1, rho1])

    def test_single_transition(self, gas_rta, rho2):
        assert is_behavior(gas_rta, [rho2])

    def test_empty_rejected(self, gas_rta):
        assert not is_behavior(gas_rta, [])

    def test_foreign_transition(self, gas_rta):
        foreign = Transition("s1", "s2", Interval(0.0, 5.0))
        with pytest.raises(ModelValidationError):
            is_behavior(gas_rta, [foreign])


def test_direct_construction_checks():
    with pytest.raises(ModelValidationError):
        RealTimeAutomaton((), ())
    with pytest.raises(ModelValidationError):
        Interval(-1.0, 2.0)
    with pytest.raises(ModelValidationError):
        RealTimeAutomaton(
            (State("a", frozenset()),),
            (Transition("a", "a", Interval(0.0, 1.0), probability=0.5),),
        )


def test_comments_and_blank_lines(models_dir):
    text = "# header\n\nstate a labels P  # trailing\n\n"
    m = parse_model(text)
    assert m.states[0].id == "a"

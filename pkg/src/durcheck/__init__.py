"""Approximate checking of linear duration invariants on real-time automata."""

__version__ = "0.1.0"

from .automaton import (
    Interval,
    ModelError,
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
from .formula import (
    FormulaError,
    FormulaSyntaxError,
    LinearDurationInvariant,
    ProbabilisticLDI,
    parse_ldi,
    parse_pldi,
    render_ldi,
    render_pldi,
)
from .ga import (
    GaConfig,
    GaReport,
    InfeasibleModelError,
    check_ldi,
    cut_and_splice,
    mutate,
    run_ga,
    run_ga_batch,
    sample_behavior,
)
from .markov import (
    AvoidanceResult,
    MarkovChain,
    PatternAutomaton,
    SolverDiagnosticError,
    avoidance_probability,
    build_chain,
    monte_carlo_avoidance,
    value_iteration,
)
from .pldi import (
    PathPattern,
    PatternSet,
    PldiReport,
    check_pldi,
    collect_counterexamples,
    generalize_patterns,
    minimize_patterns,
    strip_and_dedupe,
)
from .semantics import (
    OracleResult,
    SearchBudgetError,
    SequenceMax,
    TimeStampedBehavior,
    UnknownPropositionError,
    behavior_length,
    bounded_exact_check,
    duration,
    lf_value,
    max_lf_for_sequence,
    satisfies_all_windows,
    satisfies_ldi,
)

__all__ = [name for name in dir() if not name.startswith("_")]

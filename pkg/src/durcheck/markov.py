"""Pattern-avoidance probabilities on finite Markov chains.

For each chain state this module computes the probability that an infinite
random walk started there never traverses any member of a finite set of
forbidden state-sequence patterns. The patterns are compiled into a
failure-link trie (multi-pattern matching automaton) whose accepting nodes
absorb; pairing the chain with the trie yields a finite product chain in
which "some pattern occurred" is the event of reaching an absorbing matched
state. Avoidance is then 1 minus a reachability probability:

* matched product states get value 0,
* product states that cannot reach the matched set get value 1,
* the remaining transient states solve the linear system x = M x + b, where
  b collects one-step mass into value-1 states. The classification makes the
  system nonsingular, so Gaussian elimination with partial pivoting solves it
  exactly; the naive homogeneous system would also admit the all-zero vector.

Every solve is cross-checked against value iteration before results are
returned, and a Monte Carlo estimator is provided as a further independent
check. All computations ignore dwell times: the probability measure over
runs does not depend on them.
"""

from __future__ import annotations

import math
import warnings
from collections import deque
from dataclasses import dataclass

import numpy as np

from .automaton import ProbabilisticRealTimeAutomaton

ROW_SUM_TOLERANCE = 1e-9
PIVOT_THRESHOLD = 1e-12
VALUE_ITERATION_EPSILON = 1e-12
VALUE_ITERATION_MAX_STEPS = 10**6
CROSS_CHECK_TOLERANCE = 1e-9


class SolverDiagnosticError(RuntimeError):
    """Internal inconsistency in the linear solve; carries the system dump."""

    def __init__(self, message: str, dump: str):
        super().__init__(f"{message}\n{dump}")
        self.dump = dump


@dataclass(frozen=True)
class MarkovChain:
    """Finite chain: states in a fixed order plus per-state outgoing rows."""

    states: tuple[str, ...]
    matrix: dict[str, dict[str, float]]

    def __post_init__(self):
        if not self.states:
            raise ValueError("a chain needs at least one state")
        if set(self.matrix) != set(self.states):
            raise ValueError("matrix rows must match the state set")
        for state, row in self.matrix.items():
            for target, p in row.items():
                if target not in self.matrix:
                    raise ValueError(f"row {state!r} references unknown state {target!r}")
                if not 0.0 <= p <= 1.0:
                    raise ValueError(f"probability {p!r} on {state} -> {target} outside [0, 1]")
            total = math.fsum(row.values())
            if abs(total - 1.0) > ROW_SUM_TOLERANCE:
                raise ValueError(f"row {state!r} sums to {total!r}, not 1")


def build_chain(m: ProbabilisticRealTimeAutomaton) -> MarkovChain:
    """Keep the states and distributions, drop the dwell intervals."""
    return MarkovChain(
        states=tuple(s.id for s in m.states),
        matrix={s.id: dict(m.distribution[s.id]) for s in m.states},
    )


class PatternAutomaton:
    """Failure-link trie over state-id sequences; accepting nodes absorb.

    Standard multi-pattern construction: insert every pattern into a trie,
    then BFS from the root assigning each node the longest proper suffix of
    its path that is also a trie path. A node accepts when its own path or
    any suffix reachable through failure links completes a pattern. ``step``
    never leaves an accepting node, matching the "once violated, always
    violated" reading of pattern occurrence.
    """

    def __init__(self, patterns: list[tuple[str, ...]]):
        self.children: list[dict[str, int]] = [{}]
        self.fail: list[int] = [0]
        self.accepting: list[bool] = [False]
        for pattern in patterns:
            node = 0
            for symbol in pattern:
                nxt = self.children[node].get(symbol)
                if nxt is None:
                    self.children.append({})
                    self.fail.append(0)
                    self.accepting.append(False)
                    nxt = len(self.children) - 1
                    self.children[node][symbol] = nxt
                node = nxt
            self.accepting[node] = True
        queue = deque()
        for child in self.children[0].values():
            queue.append(child)
        while queue:
            node = queue.popleft()
            for symbol, child in self.children[node].items():
                fallback = self.fail[node]
                while fallback and symbol not in self.children[fallback]:
                    fallback = self.fail[fallback]
                self.fail[child] = self.children[fallback].get(symbol, 0)
                if self.fail[child] == child:
                    self.fail[child] = 0
                if self.accepting[self.fail[child]]:
                    self.accepting[child] = True
                queue.append(child)

    @property
    def size(self) -> int:
        return len(self.children)

    def step(self, node: int, symbol: str) -> int:
        if self.accepting[node]:
            return node
        while True:
            nxt = self.children[node].get(symbol)
            if nxt is not None:
                return nxt
            if node == 0:
                return 0
            node = self.fail[node]


@dataclass(frozen=True)
class ProductChain:
    """Chain states paired with trie progress; matched pairs are absorbing."""

    states: tuple[tuple[str, int], ...]
    matrix: tuple[dict[int, float], ...]  # by state index
    matched: frozenset[int]
    start: dict[str, int]  # chain state -> product index after reading it


def _normalize_patterns(chain: MarkovChain, patterns) -> list[tuple[str, ...]]:
    """Unify PatternSet / iterables, reject short patterns, drop impossible ones."""
    if hasattr(patterns, "patterns"):
        patterns = patterns.patterns
    normalized: list[tuple[str, ...]] = []
    seen = set()
    for p in patterns:
        states = tuple(p.states) if hasattr(p, "states") else tuple(p)
        if len(states) < 2:
            raise ValueError(f"patterns need at least two states, got {states!r}")
        possible = all(s in chain.matrix for s in states) and all(
            chain.matrix[a].get(b, 0.0) > 0.0 for a, b in zip(states, states[1:])
        )
        if not possible:
            warnings.warn(
                f"pattern {'->'.join(states)} uses a zero-probability step and can never occur",
                stacklevel=3,
            )
            continue
        if states not in seen:
            seen.add(states)
            normalized.append(states)
    return sorted(normalized)


def build_product(chain: MarkovChain, automaton: PatternAutomaton) -> ProductChain:
    start = {s: (s, automaton.step(0, s)) for s in chain.states}
    index: dict[tuple[str, int], int] = {}
    states: list[tuple[str, int]] = []
    rows: list[dict[int, float]] = []

    def intern(pair: tuple[str, int]) -> int:
        if pair not in index:
            index[pair] = len(states)
            states.append(pair)
            rows.append({})
        return index[pair]

    queue = deque(intern(start[s]) for s in chain.states)
    expanded = set()
    while queue:
        i = queue.popleft()
        if i in expanded:
            continue
        expanded.add(i)
        state, node = states[i]
        if automaton.accepting[node]:
            rows[i] = {i: 1.0}
            continue
        for target, p in chain.matrix[state].items():
            if p <= 0.0:
                continue
            j = intern((target, automaton.step(node, target)))
            rows[i][j] = rows[i].get(j, 0.0) + p
            if j not in expanded:
                queue.append(j)
    matched = frozenset(i for i, (_, node) in enumerate(states) if automaton.accepting[node])
    return ProductChain(
        states=tuple(states),
        matrix=tuple(rows),
        matched=matched,
        start={s: index[start[s]] for s in chain.states},
    )


def _classify(product: ProductChain) -> tuple[set[int], set[int], list[int]]:
    """Split product states into matched, safe (can never match), transient."""
    n = len(product.states)
    reverse: list[list[int]] = [[] for _ in range(n)]
    for i, row in enumerate(product.matrix):
        for j, p in row.items():
            if p > 0.0:
                reverse[j].append(i)
    can_reach = set(product.matched)
    queue = deque(product.matched)
    while queue:
        j = queue.popleft()
        for i in reverse[j]:
            if i not in can_reach:
                can_reach.add(i)
                queue.append(i)
    matched = set(product.matched)
    safe = set(range(n)) - can_reach
    transient = [i for i in range(n) if i in can_reach and i not in matched]
    return matched, safe, transient


def _transient_system(
    product: ProductChain, safe: set[int], transient: list[int]
) -> tuple[np.ndarray, np.ndarray]:
    """Equations x = M x + b over transient states; b is one-step mass into safe."""
    pos = {i: k for k, i in enumerate(transient)}
    n = len(transient)
    m = np.zeros((n, n))
    b = np.zeros(n)
    for i in transient:
        for j, p in product.matrix[i].items():
            if j in pos:
                m[pos[i], pos[j]] += p
            elif j in safe:
                b[pos[i]] += p
    return m, b


def _raw_dump(product: ProductChain, m: np.ndarray, b: np.ndarray, transient: list[int]) -> str:
    lines = []
    for row_index, i in enumerate(transient):
        state, node = product.states[i]
        terms = [
            f"{m[row_index, k]:.12g}*x[{product.states[transient[k]][0]},{product.states[transient[k]][1]}]"
            for k in range(len(transient))
            if m[row_index, k] != 0.0
        ]
        if b[row_index] != 0.0:
            terms.append(f"{b[row_index]:.12g}")
        lines.append(f"x[{state},{node}] = " + (" + ".join(terms) if terms else "0"))
    return "\n".join(lines)


def _solve_gaussian(m: np.ndarray, b: np.ndarray, dump: str) -> np.ndarray:
    """Solve (I - M) x = b by Gaussian elimination with partial pivoting."""
    n = len(b)
    a = np.eye(n) - m
    rhs = b.astype(float).copy()
    perm = list(range(n))
    for col in range(n):
        pivot_row = max(range(col, n), key=lambda r: abs(a[r, col]))
        if abs(a[pivot_row, col]) < PIVOT_THRESHOLD:
            raise SolverDiagnosticError(
                f"singular transient system (pivot {a[pivot_row, col]!r} in column {col})", dump
            )
        if pivot_row != col:
            a[[col, pivot_row]] = a[[pivot_row, col]]
            rhs[[col, pivot_row]] = rhs[[pivot_row, col]]
            perm[col], perm[pivot_row] = perm[pivot_row], perm[col]
        for r in range(col + 1, n):
            factor = a[r, col] / a[col, col]
            if factor != 0.0:
                a[r, col:] -= factor * a[col, col:]
                rhs[r] -= factor * rhs[col]
    x = np.zeros(n)
    for r in range(n - 1, -1, -1):
        x[r] = (rhs[r] - a[r, r + 1 :] @ x[r + 1 :]) / a[r, r]
    return x


def value_iteration(product: ProductChain) -> np.ndarray:
    """Avoidance values by iterating x <- P x from the all-ones start.

    Matched rows are frozen at zero. Iterates are evaluated at doubling step
    counts (P, P^2, P^4, ...) so the usual "stop when one more step moves the
    vector by < epsilon" rule can be checked without a million matrix-vector
    products; stopping at a later step than the first qualifying one only
    brings the iterate closer to the fixpoint.
    """
    n = len(product.states)
    p = np.zeros((n, n))
    for i, row in enumerate(product.matrix):
        if i in product.matched:
            continue
        for j, q in row.items():
            p[i, j] = q
    x0 = np.ones(n)
    x0[list(product.matched)] = 0.0

    power = p.copy()
    steps = 1
    while True:
        x = power @ x0
        one_more = p @ x
        if np.max(np.abs(one_more - x)) < VALUE_ITERATION_EPSILON:
            return one_more
        if steps >= VALUE_ITERATION_MAX_STEPS:
            return one_more
        power = power @ power
        steps *= 2


@dataclass(frozen=True)
class StateEquation:
    """One reduced equation: P[state] = sum(coefficients) + constant."""

    state: str
    coefficients: dict[str, float]
    constant: float

    def render(self) -> str:
        terms = [
            f"{c:.12g}*P[{s}]" for s, c in self.coefficients.items() if c != 0.0
        ]
        if self.constant != 0.0 or not terms:
            terms.append(f"{self.constant:.12g}")
        return f"P[{self.state}] = " + " + ".join(terms)


@dataclass(frozen=True)
class AvoidanceResult:
    """Per-state avoidance probabilities plus the solved system as evidence."""

    per_state: dict[str, float]
    system_size: int
    method: str
    equations: tuple[StateEquation, ...]

    @property
    def dump(self) -> str:
        return "\n".join(eq.render() for eq in self.equations)


def _reduced_equations(
    chain: MarkovChain,
    product: ProductChain,
    safe: set[int],
    transient: list[int],
) -> tuple[StateEquation, ...]:
    """Eliminate non-start unknowns so one equation per chain state remains.

    Start unknowns are the product states reached after reading one chain
    state. Every other transient unknown is substituted away (its equation
    normalized for any self-loop first), aggregating coefficients, which
    reproduces the per-state linear system a hand calculation would build.
    """
    start_indices = {product.start[s] for s in chain.states}
    coeffs: dict[int, dict[int, float]] = {}
    consts: dict[int, float] = {}
    for i in transient:
        row: dict[int, float] = {}
        const = 0.0
        for j, p in product.matrix[i].items():
            if j in safe:
                const += p
            elif j not in product.matched:
                row[j] = row.get(j, 0.0) + p
        coeffs[i] = row
        consts[i] = const

    for k in transient:
        if k in start_indices:
            continue
        row_k = coeffs.pop(k)
        const_k = consts.pop(k)
        self_c = row_k.pop(k, 0.0)
        scale = 1.0 - self_c
        if abs(scale) < PIVOT_THRESHOLD:
            raise SolverDiagnosticError(
                f"cannot reduce equations: unknown {product.states[k]} is its own fixpoint",
                "\n".join(f"x{i} = {coeffs.get(i)} + {consts.get(i)}" for i in coeffs),
            )
        row_k = {j: c / scale for j, c in row_k.items()}
        const_k /= scale
        for i, row in coeffs.items():
            c_ik = row.pop(k, 0.0)
            if c_ik == 0.0:
                continue
            for j, c in row_k.items():
                row[j] = row.get(j, 0.0) + c_ik * c
            consts[i] += c_ik * const_k

    index_to_state = {product.start[s]: s for s in chain.states}
    equations = []
    for s in chain.states:
        i = product.start[s]
        if i in product.matched:
            equations.append(StateEquation(s, {}, 0.0))
        elif i in safe:
            equations.append(StateEquation(s, {}, 1.0))
        else:
            named = {
                index_to_state[j]: c for j, c in coeffs[i].items() if j in index_to_state
            }
            equations.append(StateEquation(s, named, consts[i]))
    return tuple(equations)


def avoidance_probability(chain: MarkovChain, patterns) -> AvoidanceResult:
    """Probability, per start state, of never traversing any pattern.

    ``patterns`` may be a PatternSet, or any iterable of patterns (objects
    with a ``states`` tuple, or plain tuples of state ids). Patterns with a
    zero-probability step are dropped with a warning since they can never
    occur. The Gaussian solution is cross-checked against value iteration
    before returning; disagreement raises SolverDiagnosticError.
    """
    normalized = _normalize_patterns(chain, patterns)
    if not normalized:
        equations = tuple(StateEquation(s, {}, 1.0) for s in chain.states)
        return AvoidanceResult(
            per_state={s: 1.0 for s in chain.states},
            system_size=0,
            method="linear-solve",
            equations=equations,
        )
    automaton = PatternAutomaton(normalized)
    product = build_product(chain, automaton)
    matched, safe, transient = _classify(product)

    m, b = _transient_system(product, safe, transient)
    dump = _raw_dump(product, m, b, transient)
    x = _solve_gaussian(m, b, dump)

    values = np.zeros(len(product.states))
    values[list(safe)] = 1.0
    for k, i in enumerate(transient):
        values[i] = x[k]

    iterated = value_iteration(product)
    worst = float(np.max(np.abs(values - iterated)))
    if worst > CROSS_CHECK_TOLERANCE:
        raise SolverDiagnosticError(
            f"linear solve and value iteration disagree by {worst:.3e}", dump
        )

    per_state = {
        s: min(1.0, max(0.0, float(values[product.start[s]]))) for s in chain.states
    }
    equations = _reduced_equations(chain, product, safe, transient)
    return AvoidanceResult(
        per_state=per_state,
        system_size=len(transient),
        method="linear-solve",
        equations=equations,
    )


def monte_carlo_avoidance(
    chain: MarkovChain,
    patterns,
    samples: int,
    horizon: int,
    seed: int,
) -> dict[str, tuple[float, float]]:
    """Simulation estimate of the avoidance probabilities.

    Runs ``samples`` walks of up to ``horizon`` steps from every state and
    reports (estimate, half_width) with a three-sigma binomial half width.
    Walks are absorbed early once a pattern completes or once no pattern can
    ever complete; walks still undecided at the horizon count as avoiding,
    so the estimate upper-bounds the true avoidance probability. Seeds are
    split deterministically per start state.
    """
    if samples < 1:
        raise ValueError("samples must be at least 1")
    normalized = _normalize_patterns(chain, patterns)
    longest = max((len(p) for p in normalized), default=0)
    if horizon < longest:
        raise ValueError(f"horizon {horizon} is shorter than the longest pattern ({longest})")
    if not normalized:
        return {s: (1.0, 0.0) for s in chain.states}
    automaton = PatternAutomaton(normalized)
    product = build_product(chain, automaton)
    matched, safe, _ = _classify(product)

    n = len(product.states)
    cumulative = np.zeros((n, n))
    support = np.zeros((n, n), dtype=int)
    for i, row in enumerate(product.matrix):
        targets = list(row.items())
        acc = 0.0
        for k, (j, p) in enumerate(targets):
            acc += p
            cumulative[i, k] = acc
            support[i, k] = j
        # The last real entry must cover u arbitrarily close to 1 even when
        # the float row sum falls a few ulp short.
        cumulative[i, len(targets) - 1 :] = 1.0 + 1e-9
    is_matched = np.zeros(n, dtype=bool)
    is_matched[list(matched)] = True
    is_safe = np.zeros(n, dtype=bool)
    is_safe[list(safe)] = True

    results: dict[str, tuple[float, float]] = {}
    for state_index, s in enumerate(chain.states):
        rng = np.random.default_rng([seed, state_index])
        start = product.start[s]
        if is_matched[start]:
            results[s] = (0.0, 0.0)
            continue
        current = np.full(samples, start, dtype=int)
        avoiding = 0
        if is_safe[start]:
            results[s] = (1.0, 0.0)
            continue
        for _ in range(horizon):
            if current.size == 0:
                break
            u = rng.random(current.size)
            rows = cumulative[current]
            choice = (u[:, None] >= rows).sum(axis=1)
            current = support[current, choice]
            hit = is_matched[current]
            settled = is_safe[current]
            avoiding += int(settled.sum())
            current = current[~(hit | settled)]
        avoiding += current.size  # undecided at the horizon counts as avoiding
        estimate = avoiding / samples
        half_width = 3.0 * math.sqrt(estimate * (1.0 - estimate) / samples)
        results[s] = (estimate, half_width)
    return results

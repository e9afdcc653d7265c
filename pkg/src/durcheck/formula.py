"""Linear duration invariants and their probabilistic wrapper.

An invariant bounds a weighted sum of state durations whenever the observed
behavior length falls inside a window::

    <bound> -> <term> {+|- <term>} <= <real>

where ``bound`` is one of ``ell >= A``, ``ell <= B`` or ``A <= ell <= B``
(``B`` may be ``inf``) and each term is ``c*int(P)`` or a bare ``int(P)``
meaning coefficient 1. The probabilistic form wraps an invariant with a
lower probability threshold: ``[ <invariant> ] >= <lambda>``.

Propositions are bound to a model's alphabet only at check time; parsing
accepts any identifier.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from ._lex import TokenStream, format_number, tokenize


class FormulaError(ValueError):
    """Base class for formula parsing and validation failures."""


class FormulaSyntaxError(FormulaError):
    def __init__(self, message: str, line: int = 1, column: int | None = None):
        where = f"line {line}" + (f", column {column}" if column is not None else "")
        super().__init__(f"{where}: {message}")
        self.line = line
        self.column = column


@dataclass(frozen=True)
class LinearDurationInvariant:
    """If min_length <= L <= max_length then sum(coef * duration(prop)) <= bound."""

    min_length: float
    max_length: float
    terms: tuple[tuple[float, str], ...]
    bound: float

    def __post_init__(self):
        if math.isnan(self.min_length) or math.isnan(self.max_length):
            raise FormulaError("length window bounds must not be NaN")
        if self.min_length < 0:
            raise FormulaError("the length window cannot start below zero")
        if self.min_length > self.max_length:
            raise FormulaError(
                f"empty length window [{format_number(self.min_length)}, {format_number(self.max_length)}]"
            )
        seen = set()
        for _, prop in self.terms:
            if prop in seen:
                raise FormulaError(f"proposition {prop!r} appears in two terms")
            seen.add(prop)

    @property
    def propositions(self) -> frozenset[str]:
        return frozenset(prop for _, prop in self.terms)


@dataclass(frozen=True)
class ProbabilisticLDI:
    """An invariant required to hold with probability at least ``threshold``."""

    ldi: LinearDurationInvariant
    threshold: float

    def __post_init__(self):
        if not 0.0 <= self.threshold <= 1.0:
            raise FormulaError(f"probability threshold {self.threshold!r} is outside [0, 1]")


def _parse_signed_number(ts: TokenStream) -> float:
    sign = 1.0
    if ts.accept(kind="-"):
        sign = -1.0
    elif ts.accept(kind="+"):
        pass
    return sign * float(ts.next(kind="number", what="number").text)


def _parse_bound(ts: TokenStream) -> tuple[float, float]:
    tok = ts.peek()
    if tok is not None and tok.kind == "ident" and tok.text == "ell":
        ts.next()
        if ts.accept(kind="ge"):
            lo = float(ts.next(kind="number", what="lower length bound").text)
            return lo, math.inf
        ts.next(kind="le", what="'<=' or '>='")
        if ts.accept(kind="ident", text="inf"):
            return 0.0, math.inf
        return 0.0, float(ts.next(kind="number", what="upper length bound or 'inf'").text)
    lo = float(ts.next(kind="number", what="lower length bound or 'ell'").text)
    ts.next(kind="le")
    ts.next(kind="ident", text="ell")
    ts.next(kind="le")
    if ts.accept(kind="ident", text="inf"):
        return lo, math.inf
    return lo, float(ts.next(kind="number", what="upper length bound or 'inf'").text)


def _parse_term(ts: TokenStream, sign: float) -> tuple[float, str]:
    tok = ts.peek()
    if tok is not None and tok.kind == "number":
        coefficient = sign * float(ts.next().text)
        ts.next(kind="*")
    else:
        coefficient = sign
    ts.next(kind="ident", text="int")
    ts.next(kind="(")
    prop = ts.next(kind="ident", what="proposition name").text
    ts.next(kind=")")
    return coefficient, prop


def _parse_ldi_tokens(ts: TokenStream) -> LinearDurationInvariant:
    lo, hi = _parse_bound(ts)
    ts.next(kind="arrow", what="'->'")
    leading_sign = -1.0 if ts.accept(kind="-") else 1.0
    terms = [_parse_term(ts, leading_sign)]
    while True:
        if ts.accept(kind="+"):
            terms.append(_parse_term(ts, 1.0))
        elif ts.accept(kind="-"):
            terms.append(_parse_term(ts, -1.0))
        else:
            break
    ts.next(kind="le", what="'<='")
    bound = _parse_signed_number(ts)
    return LinearDurationInvariant(lo, hi, tuple(terms), bound)


def parse_ldi(text: str) -> LinearDurationInvariant:
    """Parse invariant text; omitted window bounds default to [0, inf)."""
    tokens = tokenize(text.strip(), 1, FormulaSyntaxError)
    ts = TokenStream(tokens, 1, FormulaSyntaxError, len(text.strip()))
    ldi = _parse_ldi_tokens(ts)
    ts.expect_end()
    return ldi


def parse_pldi(text: str) -> ProbabilisticLDI:
    """Parse ``[ <invariant> ] >= <lambda>``."""
    tokens = tokenize(text.strip(), 1, FormulaSyntaxError)
    ts = TokenStream(tokens, 1, FormulaSyntaxError, len(text.strip()))
    ts.next(kind="[", what="'['")
    ldi = _parse_ldi_tokens(ts)
    ts.next(kind="]", what="']'")
    ts.next(kind="ge", what="'>='")
    threshold = _parse_signed_number(ts)
    ts.expect_end()
    return ProbabilisticLDI(ldi, threshold)


def render_ldi(d: LinearDurationInvariant) -> str:
    """Serialize an invariant; ``parse_ldi(render_ldi(d)) == d``."""
    if math.isinf(d.max_length):
        window = f"ell >= {format_number(d.min_length)}"
    elif d.min_length == 0:
        window = f"ell <= {format_number(d.max_length)}"
    else:
        window = f"{format_number(d.min_length)} <= ell <= {format_number(d.max_length)}"
    if not d.terms:
        raise FormulaError("cannot render an invariant with no terms")
    parts: list[str] = []
    for coefficient, prop in d.terms:
        term = f"{format_number(abs(coefficient))}*int({prop})"
        if not parts:
            parts.append(term if coefficient >= 0 else f"-{term}")
        else:
            parts.append(f"{'+' if coefficient >= 0 else '-'} {term}")
    return f"{window} -> {' '.join(parts)} <= {format_number(d.bound)}"


def render_pldi(p: ProbabilisticLDI) -> str:
    return f"[ {render_ldi(p.ldi)} ] >= {format_number(p.threshold)}"

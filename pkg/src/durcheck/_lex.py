"""Shared tokenizer for the model and formula text formats."""

from __future__ import annotations

import re
from dataclasses import dataclass


@dataclass(frozen=True)
class Token:
    kind: str
    text: str
    column: int  # 1-based position in the source line


_TOKEN_RE = re.compile(
    r"(?P<ws>\s+)"
    r"|(?P<arrow>->)"
    r"|(?P<le><=)"
    r"|(?P<ge>>=)"
    r"|(?P<number>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)"
    r"|(?P<ident>[A-Za-z_][A-Za-z0-9_]*)"
    r"|(?P<punct>[\[\](),*+\-])"
)


def tokenize(line: str, lineno: int, error: type[Exception]) -> list[Token]:
    """Split one source line into tokens, raising ``error`` on stray characters.

    ``error`` must accept (message, line, column).
    """
    tokens: list[Token] = []
    pos = 0
    while pos < len(line):
        m = _TOKEN_RE.match(line, pos)
        if m is None:
            raise error(f"unexpected character {line[pos]!r}", lineno, pos + 1)
        if m.lastgroup != "ws":
            kind = m.lastgroup or "punct"
            text = m.group()
            if kind == "punct":
                kind = text
            tokens.append(Token(kind, text, m.start() + 1))
        pos = m.end()
    return tokens


class TokenStream:
    """Cursor over a token list with expect/accept helpers."""

    def __init__(self, tokens: list[Token], lineno: int, error: type[Exception], line_length: int):
        self._tokens = tokens
        self._lineno = lineno
        self._error = error
        self._end_column = line_length + 1
        self._i = 0

    def peek(self) -> Token | None:
        return self._tokens[self._i] if self._i < len(self._tokens) else None

    def next(self, kind: str | None = None, text: str | None = None, what: str | None = None) -> Token:
        tok = self.peek()
        label = what or (repr(text) if text else kind) or "token"
        if tok is None:
            raise self._error(f"expected {label}, found end of line", self._lineno, self._end_column)
        if (kind is not None and tok.kind != kind) or (text is not None and tok.text != text):
            raise self._error(f"expected {label}, found {tok.text!r}", self._lineno, tok.column)
        self._i += 1
        return tok

    def accept(self, kind: str | None = None, text: str | None = None) -> Token | None:
        tok = self.peek()
        if tok is None:
            return None
        if (kind is None or tok.kind == kind) and (text is None or tok.text == text):
            self._i += 1
            return tok
        return None

    def expect_end(self) -> None:
        tok = self.peek()
        if tok is not None:
            raise self._error(f"unexpected trailing {tok.text!r}", self._lineno, tok.column)


def format_number(x: float) -> str:
    """Render a float so parsing it back is exact; integral values drop the point."""
    if x == float("inf"):
        return "inf"
    if x == int(x) and abs(x) < 1e16:
        return str(int(x))
    return repr(x)

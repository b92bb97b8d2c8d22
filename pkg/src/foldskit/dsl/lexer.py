from __future__ import annotations

import re
from dataclasses import dataclass

from ..errors import Diagnostic, ParseError, SourceSpan

KEYWORDS = frozenset(
    {"signature", "sort", "rank", "eq", "structure", "over", "theory", "axiom", "forall", "exists", "not", "true", "false"}
)

IDENT_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_]*\Z")

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>[ \t\r\n]+)
  | (?P<comment>//[^\n]*)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<number>[0-9]+)
  | (?P<string>"(?:[^"\\\n]|\\.)*")
  | (?P<op><->|->|==|/\\|\\/)
  | (?P<punct>[{}(),:=.*])
    """,
    re.VERBOSE,
)


@dataclass(frozen=True)
class Token:
    kind: str  # ident, number, string, op, punct, eof
    value: str
    span: SourceSpan

    def is_(self, kind: str, value: str | None = None) -> bool:
        return self.kind == kind and (value is None or self.value == value)


def _unescape(raw: str) -> str:
    out = []
    i = 0
    while i < len(raw):
        ch = raw[i]
        if ch == "\\" and i + 1 < len(raw):
            nxt = raw[i + 1]
            out.append({"n": "\n", "t": "\t"}.get(nxt, nxt))
            i += 2
        else:
            out.append(ch)
            i += 1
    return "".join(out)


def tokenize(text: str, file: str | None = None) -> list[Token]:
    """Split ``text`` into tokens; raise :class:`ParseError` on stray input."""
    tokens: list[Token] = []
    pos = 0
    line, col = 1, 1
    n = len(text)
    while pos < n:
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            if text[pos] == '"':
                end = text.find("\n", pos)
                length = (end if end != -1 else n) - pos
                raise ParseError([Diagnostic("unterminated string literal", SourceSpan(file, line, col, max(length, 1)))])
            raise ParseError([Diagnostic(f"unexpected character {text[pos]!r}", SourceSpan(file, line, col, 1))])
        kind = m.lastgroup
        raw = m.group()
        if kind not in ("ws", "comment"):
            value = _unescape(raw[1:-1]) if kind == "string" else raw
            tokens.append(Token(kind, value, SourceSpan(file, line, col, len(raw))))
        for ch in raw:
            if ch == "\n":
                line, col = line + 1, 1
            else:
                col += 1
        pos = m.end()
    tokens.append(Token("eof", "", _eof_span(text, file)))
    return tokens


def _eof_span(text: str, file: str | None) -> SourceSpan:
    """A span on the last character, so that it lies inside the text."""
    stripped = text.rstrip("\r\n")
    if not stripped:
        return SourceSpan(file, 1, 1, 1)
    line = stripped.count("\n") + 1
    col = len(stripped) - (stripped.rfind("\n") + 1)
    return SourceSpan(file, line, max(col, 1), 1)

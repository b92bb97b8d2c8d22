"""Exception hierarchy and validation reports shared by all foldskit modules."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Iterator


class FoldsError(Exception):
    """Base class for every error raised by foldskit."""


class SignatureError(FoldsError):
    pass


class UndefinedSortError(SignatureError):
    pass


class EndpointMismatchError(SignatureError):
    pass


class RankOutOfRangeError(SignatureError):
    pass


class StructureError(FoldsError):
    pass


class UnknownElementError(StructureError):
    pass


class BoundaryError(StructureError):
    """A boundary is ill-typed, incomplete, or violates path equations."""


class BoundaryMismatchError(FoldsError):
    """Two elements do not live over the same lower boundary."""


class DerivationError(FoldsError):
    pass


class MorphismError(FoldsError):
    pass


@dataclass(frozen=True)
class SourceSpan:
    """A 1-based location in a source text."""

    file: str | None
    line: int
    column: int
    length: int = 1

    def __str__(self) -> str:
        where = self.file or "<input>"
        return f"{where}:{self.line}:{self.column}"


@dataclass(frozen=True)
class Diagnostic:
    message: str
    span: SourceSpan | None = None

    def __str__(self) -> str:
        return f"{self.span}: {self.message}" if self.span else self.message


class ParseError(FoldsError):
    """One or more located diagnostics from the DSL front end."""

    def __init__(self, diagnostics: list[Diagnostic]):
        self.diagnostics = list(diagnostics)
        super().__init__("\n".join(str(d) for d in self.diagnostics))

    @property
    def span(self) -> SourceSpan | None:
        return self.diagnostics[0].span if self.diagnostics else None


class ElaborationError(FoldsError):
    def __init__(self, message: str, span: Any = None):
        super().__init__(message)
        self.message = message
        self.span = span


class BudgetExhausted(FoldsError):
    """Raised when a search exceeds its node budget."""

    def __init__(self, budget: int):
        super().__init__(f"search budget of {budget} nodes exhausted")
        self.budget = budget


@dataclass(frozen=True)
class Issue:
    code: str
    message: str
    location: Any = None

    def __str__(self) -> str:
        return f"[{self.code}] {self.message}"


@dataclass
class ValidationReport:
    issues: list[Issue] = field(default_factory=list)

    def add(self, code: str, message: str, location: Any = None) -> None:
        self.issues.append(Issue(code, message, location))

    @property
    def ok(self) -> bool:
        return not self.issues

    def codes(self) -> list[str]:
        return [i.code for i in self.issues]

    def __iter__(self) -> Iterator[Issue]:
        return iter(self.issues)

    def __str__(self) -> str:
        if self.ok:
            return "ok"
        return "\n".join(str(i) for i in self.issues)

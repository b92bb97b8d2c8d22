"""Recursive-descent parsers for ``.fsig``, ``.fstr`` and ``.fthy`` texts.

Every production is decided by one token of lookahead.  Reference errors are
collected and reported together, each with the span of the offending token.
"""

from __future__ import annotations

from typing import Callable, Mapping, Union

from ..errors import Diagnostic, ElaborationError, ParseError, SourceSpan
from ..logic import (
    And,
    Bot,
    Equal,
    Exists,
    Forall,
    Formula,
    Iff,
    Implies,
    Inhabited,
    Not,
    Or,
    Theory,
    Top,
    VarDecl,
    elaborate,
)
from ..signature import Generator, PathEquation, Signature, SortDecl, validate_signature
from ..structure import Structure
from .lexer import KEYWORDS, Token, tokenize

SignatureSource = Union[Signature, Mapping[str, Signature], Callable[[str], Signature], None]


class _Parser:
    def __init__(self, text: str, file: str | None = None):
        self.tokens = tokenize(text, file)
        self.i = 0
        self.file = file

    @property
    def tok(self) -> Token:
        return self.tokens[self.i]

    def peek(self, k: int = 1) -> Token:
        return self.tokens[min(self.i + k, len(self.tokens) - 1)]

    def advance(self) -> Token:
        t = self.tokens[self.i]
        if t.kind != "eof":
            self.i += 1
        return t

    def error(self, message: str, tok: Token | None = None) -> ParseError:
        tok = tok or self.tok
        return ParseError([Diagnostic(message, tok.span)])

    def describe(self, tok: Token) -> str:
        return "end of input" if tok.kind == "eof" else repr(tok.value)

    def expect(self, kind: str, value: str | None = None, what: str | None = None) -> Token:
        if not self.tok.is_(kind, value):
            wanted = what or (repr(value) if value else kind)
            raise self.error(f"expected {wanted}, found {self.describe(self.tok)}")
        return self.advance()

    def keyword(self, word: str) -> Token:
        if not (self.tok.kind == "ident" and self.tok.value == word):
            raise self.error(f"expected '{word}', found {self.describe(self.tok)}")
        return self.advance()

    def at_keyword(self, word: str) -> bool:
        return self.tok.kind == "ident" and self.tok.value == word

    def name(self, what: str) -> Token:
        if self.tok.kind != "ident":
            raise self.error(f"expected {what}, found {self.describe(self.tok)}")
        if self.tok.value in KEYWORDS:
            raise self.error(f"'{self.tok.value}' is a reserved word and cannot be used as {what}")
        return self.advance()

    def punct(self, ch: str) -> Token:
        return self.expect("punct", ch, repr(ch))

    def at_punct(self, ch: str) -> bool:
        return self.tok.is_("punct", ch)

    def element(self) -> Token:
        t = self.tok
        if t.kind in ("ident", "number", "string") or t.is_("punct", "*"):
            return self.advance()
        raise self.error(f"expected an element name, found {self.describe(t)}")

    def end(self) -> None:
        if self.tok.kind != "eof":
            raise self.error(f"unexpected {self.describe(self.tok)} after the closing brace")

    # -- signatures --------------------------------------------------------
    def signature(self) -> tuple[Signature, dict]:
        self.keyword("signature")
        name = self.name("a signature name").value
        self.punct("{")
        sorts: list[tuple[Token, int, list[tuple[Token, Token]]]] = []
        raw_eqs: list = []
        while not self.at_punct("}"):
            if self.at_keyword("sort"):
                self.advance()
                sid = self.name("a sort name")
                self.keyword("rank")
                rank_tok = self.expect("number", what="a rank")
                gens = []
                if self.at_punct("{"):
                    self.advance()
                    while not self.at_punct("}"):
                        label = self.name("a generator label")
                        self.punct(":")
                        target = self.name("a target sort")
                        gens.append((label, target))
                        if not self.at_punct(","):
                            break
                        self.advance()
                    self.punct("}")
                sorts.append((sid, int(rank_tok.value), gens))
            elif self.at_keyword("eq"):
                eq_tok = self.advance()
                source = None
                if self.tok.kind == "ident" and self.peek().is_("punct", ":"):
                    source = self.name("a sort name")
                    self.advance()
                lhs = self.path()
                self.punct("=")
                rhs = self.path()
                raw_eqs.append((eq_tok, source, lhs, rhs))
            else:
                raise self.error(f"expected 'sort', 'eq' or '}}', found {self.describe(self.tok)}")
        self.punct("}")
        self.end()
        return self._build_signature(name, sorts, raw_eqs)

    def path(self) -> list[Token]:
        labels = [self.name("a generator label")]
        while self.at_punct("."):
            self.advance()
            labels.append(self.name("a generator label"))
        return labels

    def _build_signature(self, name, sorts, raw_eqs) -> tuple[Signature, dict]:
        diags: list[Diagnostic] = []
        declared: dict = {}
        for sid, rank, gens in sorts:
            if sid.value in declared:
                diags.append(Diagnostic(f"sort {sid.value} is declared twice", sid.span))
            declared.setdefault(sid.value, (rank, gens))
        for sid, rank, gens in sorts:
            seen = set()
            for label, target in gens:
                if label.value in seen:
                    diags.append(Diagnostic(f"generator {label.value} is declared twice in {sid.value}", label.span))
                seen.add(label.value)
                if target.value not in declared:
                    diags.append(Diagnostic(f"unknown sort {target.value}", target.span))
                elif declared[target.value][0] >= rank:
                    diags.append(
                        Diagnostic(
                            f"generator {label.value}: {sid.value} -> {target.value} must decrease rank "
                            f"({rank} -> {declared[target.value][0]})",
                            target.span,
                        )
                    )
        decls = [SortDecl(sid.value, rank, tuple(Generator(l.value, t.value) for l, t in gens)) for sid, rank, gens in sorts]
        owners: dict = {}
        for d in decls:
            for g in d.generators:
                owners.setdefault(g.label, []).append(d.id)
        equations = []
        spans: dict = {}
        for eq_tok, source, lhs, rhs in raw_eqs:
            if source is not None:
                if source.value not in declared:
                    diags.append(Diagnostic(f"unknown sort {source.value}", source.span))
                    continue
                src = source.value
            else:
                first = lhs[-1]
                cands = owners.get(first.value, [])
                if not cands:
                    diags.append(Diagnostic(f"no sort has a generator named {first.value}", first.span))
                    continue
                if len(cands) > 1:
                    diags.append(
                        Diagnostic(
                            f"generator {first.value} is ambiguous (sorts {', '.join(cands)}); "
                            f"write 'eq SORT: ...' to name the source",
                            first.span,
                        )
                    )
                    continue
                src = cands[0]
            ok = True
            targets = []
            for side in (lhs, rhs):
                cur = src
                for label in reversed(side):
                    d = next((x for x in decls if x.id == cur), None)
                    g = d.generator(label.value) if d is not None else None
                    if g is None:
                        diags.append(Diagnostic(f"sort {cur} has no generator {label.value}; path is not composable", label.span))
                        ok = False
                        break
                    cur = g.target
                targets.append(cur)
            if ok and targets[0] != targets[1]:
                diags.append(
                    Diagnostic(
                        f"equation endpoints differ: left side ends at {targets[0]}, right side at {targets[1]}",
                        eq_tok.span,
                    )
                )
                ok = False
            if ok:
                eq = PathEquation(src, tuple(t.value for t in lhs), tuple(t.value for t in rhs))
                equations.append(eq)
                spans[eq] = eq_tok.span
        if diags:
            raise ParseError(diags)
        sig = Signature(name, decls, equations)
        report = validate_signature(sig)
        if not report.ok:
            raise ParseError([Diagnostic(str(issue)) for issue in report])
        return sig, spans

    # -- structures --------------------------------------------------------
    def header(self, word: str, resolve) -> tuple[str, Signature]:
        self.keyword(word)
        name = self.name(f"a {word} name").value
        self.keyword("over")
        sig_tok = self.name("a signature name")
        sig = resolve(sig_tok)
        return name, sig

    def structure(self, resolve) -> Structure:
        name, sig = self.header("structure", resolve)
        self.punct("{")
        blocks = []
        while not self.at_punct("}"):
            sort_tok = self.name("a sort name")
            self.punct("=")
            self.punct("{")
            elems = []
            while not self.at_punct("}"):
                e = self.element()
                args = []
                if self.at_punct("("):
                    self.advance()
                    while not self.at_punct(")"):
                        label = self.name("a generator label")
                        self.punct("=")
                        args.append((label, self.element()))
                        if not self.at_punct(","):
                            break
                        self.advance()
                    self.punct(")")
                elems.append((e, args))
                if not self.at_punct(","):
                    break
                self.advance()
            self.punct("}")
            blocks.append((sort_tok, elems))
        self.punct("}")
        self.end()
        return self._build_structure(name, sig, blocks)

    def _build_structure(self, name, sig: Signature, blocks) -> Structure:
        diags: list[Diagnostic] = []
        carriers: dict = {}
        where: dict = {}
        for sort_tok, elems in blocks:
            if not sig.has_sort(sort_tok.value):
                diags.append(Diagnostic(f"signature {sig.name} has no sort {sort_tok.value}", sort_tok.span))
                continue
            if sort_tok.value in carriers:
                diags.append(Diagnostic(f"sort {sort_tok.value} is given twice", sort_tok.span))
                continue
            ids = []
            for e, _ in elems:
                if e.value in ids:
                    diags.append(Diagnostic(f"element {e.value} is listed twice in {sort_tok.value}", e.span))
                ids.append(e.value)
                where[(sort_tok.value, e.value)] = e.span
            carriers[sort_tok.value] = ids
        actions: dict = {}
        for sort_tok, elems in blocks:
            K = sort_tok.value
            if not sig.has_sort(K):
                continue
            decl = sig.sort(K)
            per: dict = {g.label: {} for g in decl.generators}
            for e, args in elems:
                given = set()
                for label, val in args:
                    g = decl.generator(label.value)
                    if g is None:
                        diags.append(Diagnostic(f"sort {K} has no generator {label.value}", label.span))
                        continue
                    if label.value in given:
                        diags.append(Diagnostic(f"generator {label.value} is given twice", label.span))
                        continue
                    given.add(label.value)
                    if val.value not in carriers.get(g.target, ()):
                        diags.append(Diagnostic(f"{val.value} is not an element of {g.target}", val.span))
                        continue
                    per[label.value][e.value] = val.value
                missing = [g.label for g in decl.generators if g.label not in given]
                if missing:
                    diags.append(
                        Diagnostic(
                            f"element {e.value} of {K} is missing generator {', '.join(missing)}",
                            e.span,
                        )
                    )
            actions[K] = per
        if diags:
            raise ParseError(diags)
        M = Structure(sig, carriers, actions, name=name)
        report = M.validate()
        if not report.ok:
            out = []
            for issue in report:
                loc = issue.location
                span = where.get(loc) if isinstance(loc, tuple) else None
                out.append(Diagnostic(issue.message, span))
            raise ParseError(out)
        return M

    # -- theories ----------------------------------------------------------
    def theory(self, resolve) -> Theory:
        name, sig = self.header("theory", resolve)
        self.punct("{")
        axioms = []
        names: set = set()
        diags: list[Diagnostic] = []
        while not self.at_punct("}"):
            self.keyword("axiom")
            ax = self.name("an axiom name")
            self.punct(":")
            phi = self.formula()
            if ax.value in names:
                diags.append(Diagnostic(f"axiom {ax.value} is declared twice", ax.span))
            names.add(ax.value)
            try:
                axioms.append((ax.value, elaborate(sig, phi)))
            except ElaborationError as exc:
                diags.append(Diagnostic(exc.message, exc.span or ax.span))
        self.punct("}")
        self.end()
        if diags:
            raise ParseError(diags)
        return Theory(name, sig, tuple(axioms))

    def formula(self) -> Formula:
        if self.at_keyword("forall") or self.at_keyword("exists"):
            return self.quantifier()
        left = self.implication()
        if self.tok.is_("op", "<->"):
            op = self.advance()
            right = self.implication()
            return Iff(left, right, op.span)
        return left

    def quantifier(self) -> Formula:
        q = self.advance()
        names = [self.name("a variable name")]
        while self.tok.kind == "ident" and self.tok.value not in KEYWORDS:
            names.append(self.advance())
        self.punct(":")
        sort_tok = self.name("a sort name")
        args = self.arguments() if self.at_punct("(") else ()
        self.punct(",")
        body = self.formula()
        ctor = Forall if q.value == "forall" else Exists
        for n in reversed(names):
            body = ctor(VarDecl(n.value, sort_tok.value, args, n.span), body, q.span)
        return body

    def arguments(self) -> tuple:
        self.punct("(")
        args = []
        while not self.at_punct(")"):
            label = self.name("a generator label")
            self.punct("=")
            var = self.name("a variable name")
            args.append((label.value, var.value))
            if not self.at_punct(","):
                break
            self.advance()
        self.punct(")")
        return tuple(args)

    def implication(self) -> Formula:
        left = self.disjunction()
        if self.tok.is_("op", "->"):
            op = self.advance()
            if self.at_keyword("forall") or self.at_keyword("exists"):
                return Implies(left, self.quantifier(), op.span)
            return Implies(left, self.implication(), op.span)
        return left

    def disjunction(self) -> Formula:
        left = self.conjunction()
        while self.tok.is_("op", "\\/"):
            op = self.advance()
            right = self.quantifier() if self.at_keyword("forall") or self.at_keyword("exists") else self.conjunction()
            left = Or(left, right, op.span)
        return left

    def conjunction(self) -> Formula:
        left = self.unary()
        while self.tok.is_("op", "/\\"):
            op = self.advance()
            right = self.quantifier() if self.at_keyword("forall") or self.at_keyword("exists") else self.unary()
            left = And(left, right, op.span)
        return left

    def unary(self) -> Formula:
        t = self.tok
        if self.at_keyword("not"):
            self.advance()
            if self.at_keyword("forall") or self.at_keyword("exists"):
                return Not(self.quantifier(), t.span)
            return Not(self.unary(), t.span)
        if self.at_keyword("true"):
            self.advance()
            return Top(t.span)
        if self.at_keyword("false"):
            self.advance()
            return Bot(t.span)
        if self.at_punct("("):
            self.advance()
            inner = self.formula()
            self.punct(")")
            return inner
        if t.kind == "ident" and t.value not in KEYWORDS:
            nxt = self.peek()
            if nxt.is_("punct", "("):
                self.advance()
                return Inhabited(t.value, self.arguments(), t.span)
            if nxt.is_("op", "=="):
                self.advance()
                self.advance()
                right = self.name("a variable name")
                return Equal(t.value, right.value, t.span)
            self.advance()
            raise self.error(f"expected '(' or '==' after {t.value}")
        raise self.error(f"expected a formula, found {self.describe(t)}")


def _resolver(sig: SignatureSource) -> Callable[[Token], Signature]:
    def resolve(tok: Token) -> Signature:
        name = tok.value
        found = None
        if isinstance(sig, Signature):
            found = sig if sig.name == name else None
            if found is None:
                raise ParseError([Diagnostic(f"expected a structure over {sig.name}, found {name}", tok.span)])
        elif isinstance(sig, Mapping):
            found = sig.get(name)
        elif callable(sig):
            try:
                found = sig(name)
            except Exception:
                found = None
        else:
            from ..catalog import builtin_signature

            try:
                found = builtin_signature(name)
            except KeyError:
                found = None
        if found is None:
            raise ParseError([Diagnostic(f"unknown signature {name}", tok.span)])
        return found

    return resolve


def parse_signature(text: str, file: str | None = None) -> Signature:
    """Parse a ``.fsig`` text."""
    return _Parser(text, file).signature()[0]


def parse_structure(text: str, sig: SignatureSource = None, file: str | None = None) -> Structure:
    """Parse a ``.fstr`` text.  ``sig`` is a signature, a name-to-signature
    mapping, a resolver callable, or ``None`` for the builtins."""
    return _Parser(text, file).structure(_resolver(sig))


def parse_theory(text: str, sig: SignatureSource = None, file: str | None = None) -> Theory:
    """Parse a ``.fthy`` text; every axiom is elaborated."""
    return _Parser(text, file).theory(_resolver(sig))


def parse_formula(text: str, sig: Signature | None = None) -> Formula:
    """Parse a single formula; elaborate it when ``sig`` is given."""
    p = _Parser(text)
    phi = p.formula()
    p.end()
    return elaborate(sig, phi) if sig is not None else phi


def detect_kind(text: str) -> str | None:
    """``signature``, ``structure`` or ``theory``, judged by the first token."""
    try:
        toks = tokenize(text)
    except ParseError:
        return None
    first = toks[0]
    if first.kind == "ident" and first.value in ("signature", "structure", "theory"):
        return first.value
    return None


def header_names(text: str) -> tuple[str | None, str | None]:
    """The declared name and, for structures and theories, the signature name."""
    try:
        toks = tokenize(text)
    except ParseError:
        return None, None
    name = toks[1].value if len(toks) > 1 and toks[1].kind == "ident" else None
    over = None
    if len(toks) > 3 and toks[2].is_("ident", "over") and toks[3].kind == "ident":
        over = toks[3].value
    return name, over


__all__ = [
    "parse_signature",
    "parse_structure",
    "parse_theory",
    "parse_formula",
    "detect_kind",
    "header_names",
    "SourceSpan",
]

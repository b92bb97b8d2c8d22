"""Dependent-sorted first-order logic over a signature.

Variables are declared with a sort and, for every generating arrow of that
sort, an earlier variable naming its image: ``f : A(d=x, c=y)``.  Quantifiers
range over the fiber of the sort at the named boundary.  Atoms are fiber
inhabitation ``T(t0=f, t1=g, t2=h)`` and equality ``f == g``.  Evaluation is
classical.

Free variables of rank 0 whose sort can be read off a generator position are
closed by implicit universal quantifiers, in order of first occurrence.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Callable

from .errors import ElaborationError, SourceSpan
from .signature import Signature, SortId
from .structure import Structure


@dataclass(frozen=True)
class Formula:
    pass


@dataclass(frozen=True)
class Top(Formula):
    span: SourceSpan | None = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class Bot(Formula):
    span: SourceSpan | None = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class Not(Formula):
    body: Formula
    span: SourceSpan | None = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class And(Formula):
    left: Formula
    right: Formula
    span: SourceSpan | None = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class Or(Formula):
    left: Formula
    right: Formula
    span: SourceSpan | None = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class Implies(Formula):
    left: Formula
    right: Formula
    span: SourceSpan | None = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class Iff(Formula):
    left: Formula
    right: Formula
    span: SourceSpan | None = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class VarDecl:
    name: str
    sort: SortId
    args: tuple[tuple[str, str], ...] = ()
    span: SourceSpan | None = field(default=None, compare=False, repr=False)

    def arg(self, label: str) -> str | None:
        for l, v in self.args:
            if l == label:
                return v
        return None


@dataclass(frozen=True)
class Forall(Formula):
    var: VarDecl
    body: Formula
    span: SourceSpan | None = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class Exists(Formula):
    var: VarDecl
    body: Formula
    span: SourceSpan | None = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class Inhabited(Formula):
    sort: SortId
    args: tuple[tuple[str, str], ...] = ()
    span: SourceSpan | None = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class Equal(Formula):
    left: str
    right: str
    span: SourceSpan | None = field(default=None, compare=False, repr=False)


def forall(name: str, sort: SortId, body: Formula, **args: str) -> Forall:
    return Forall(VarDecl(name, sort, tuple(args.items())), body)


def exists(name: str, sort: SortId, body: Formula, **args: str) -> Exists:
    return Exists(VarDecl(name, sort, tuple(args.items())), body)


def conj(*parts: Formula) -> Formula:
    out: Formula | None = None
    for p in parts:
        out = p if out is None else And(out, p)
    return out if out is not None else Top()


@dataclass(frozen=True)
class Theory:
    name: str
    signature: Signature
    axioms: tuple[tuple[str, Formula], ...]

    def axiom(self, name: str) -> Formula:
        for n, phi in self.axioms:
            if n == name:
                return phi
        raise KeyError(name)

    @property
    def names(self) -> list[str]:
        return [n for n, _ in self.axioms]


# -- elaboration ---------------------------------------------------------


@dataclass
class _Var:
    sort: SortId
    args: dict[str, str]


class _Elaborator:
    def __init__(self, sig: Signature):
        self.sig = sig

    def fail(self, message: str, node: Any) -> None:
        raise ElaborationError(message, getattr(node, "span", None))

    def sort_of(self, K: SortId, node: Any):
        if not self.sig.has_sort(K):
            self.fail(f"unknown sort {K}", node)
        return self.sig.sort(K)

    # free-variable inference
    def collect(self, phi: Formula, bound: frozenset, free: dict, order: list) -> None:
        def note(var: str, sort: SortId | None, node: Any) -> None:
            if var in bound:
                return
            if var not in free:
                free[var] = []
                order.append(var)
            free[var].append((sort, node))

        def note_args(K: SortId, args, node: Any) -> None:
            decl = self.sort_of(K, node)
            for label, v in args:
                g = decl.generator(label)
                note(v, g.target if g is not None else None, node)

        if isinstance(phi, (Forall, Exists)):
            note_args(phi.var.sort, phi.var.args, phi.var)
            self.collect(phi.body, bound | {phi.var.name}, free, order)
        elif isinstance(phi, Inhabited):
            note_args(phi.sort, phi.args, phi)
        elif isinstance(phi, Equal):
            note(phi.left, None, phi)
            note(phi.right, None, phi)
        elif isinstance(phi, Not):
            self.collect(phi.body, bound, free, order)
        elif isinstance(phi, (And, Or, Implies, Iff)):
            self.collect(phi.left, bound, free, order)
            self.collect(phi.right, bound, free, order)

    def close(self, phi: Formula) -> Formula:
        free: dict = {}
        order: list = []
        self.collect(phi, frozenset(), free, order)
        decls = []
        for v in order:
            sorts = {s for s, _ in free[v] if s is not None}
            node = free[v][0][1]
            if not sorts:
                self.fail(f"unbound variable {v}", node)
            if len(sorts) > 1:
                self.fail(f"variable {v} is used at sorts {', '.join(sorted(map(str, sorts)))}", node)
            (K,) = sorts
            if self.sig.rank(K) != 0:
                self.fail(f"unbound variable {v} of sort {K}; only rank-0 variables are closed implicitly", node)
            decls.append(VarDecl(v, K, (), getattr(node, "span", None)))
        for d in reversed(decls):
            phi = Forall(d, phi, d.span)
        return phi

    # typing
    def reach(self, env: dict, var: str, path: tuple) -> str:
        cur = var
        for label in path:
            cur = env[cur].args[label]
        return cur

    def check_args(self, K: SortId, args, env: dict, node: Any) -> dict:
        decl = self.sort_of(K, node)
        given: dict = {}
        for label, v in args:
            if decl.generator(label) is None:
                self.fail(f"sort {K} has no generator {label!r}", node)
            if label in given:
                self.fail(f"generator {label} of {K} is given twice", node)
            if v not in env:
                self.fail(f"unbound variable {v}", node)
            target = decl.generator(label).target
            if env[v].sort != target:
                self.fail(f"{label}={v}: {v} has sort {env[v].sort}, expected {target}", node)
            given[label] = v
        missing = [g.label for g in decl.generators if g.label not in given]
        if missing:
            self.fail(f"{K}(...) is missing generator {', '.join(missing)}", node)
        # every path class must reach a single variable
        table = self.sig._table(K) if decl.rank > 0 else None
        if table is not None:
            seen: dict = {}
            for path, rep in table.canonical.items():
                reached = self.reach(env, given[path[0]], path[1:])
                prev = seen.setdefault(rep, (reached, path))
                if prev[0] != reached:
                    a = ".".join(reversed(prev[1]))
                    b = ".".join(reversed(path))
                    self.fail(
                        f"boundary inconsistency in {K}(...): {a} is {prev[0]} but {b} is {reached}",
                        node,
                    )
        return given

    def check(self, phi: Formula, env: dict) -> None:
        if isinstance(phi, (Top, Bot)):
            return
        if isinstance(phi, Not):
            self.check(phi.body, env)
        elif isinstance(phi, (And, Or, Implies, Iff)):
            self.check(phi.left, env)
            self.check(phi.right, env)
        elif isinstance(phi, (Forall, Exists)):
            given = self.check_args(phi.var.sort, phi.var.args, env, phi.var)
            inner = dict(env)
            inner[phi.var.name] = _Var(phi.var.sort, given)
            self.check(phi.body, inner)
        elif isinstance(phi, Inhabited):
            self.check_args(phi.sort, phi.args, env, phi)
        elif isinstance(phi, Equal):
            for v in (phi.left, phi.right):
                if v not in env:
                    self.fail(f"unbound variable {v}", phi)
            lv, rv = env[phi.left], env[phi.right]
            if lv.sort != rv.sort:
                self.fail(f"cannot compare {phi.left} : {lv.sort} with {phi.right} : {rv.sort}", phi)
            if self.sig.rank(lv.sort) > 0:
                for path in self.sig._table(lv.sort).canonical:
                    if self.reach(env, phi.left, path) != self.reach(env, phi.right, path):
                        self.fail(f"{phi.left} and {phi.right} lie over different boundaries", phi)
        else:
            self.fail(f"not a formula: {phi!r}", phi)


def elaborate(sig: Signature, phi: Formula) -> Formula:
    """Type-check ``phi`` against ``sig`` and close its free variables.

    Raises :class:`ElaborationError` carrying the offending node's span.
    """
    e = _Elaborator(sig)
    closed = e.close(phi)
    e.check(closed, {})
    return closed


def free_variables(phi: Formula) -> set[str]:
    out: set = set()

    def go(p: Formula, bound: frozenset) -> None:
        if isinstance(p, (Forall, Exists)):
            out.update(v for _, v in p.var.args if v not in bound)
            go(p.body, bound | {p.var.name})
        elif isinstance(p, Inhabited):
            out.update(v for _, v in p.args if v not in bound)
        elif isinstance(p, Equal):
            out.update(v for v in (p.left, p.right) if v not in bound)
        elif isinstance(p, Not):
            go(p.body, bound)
        elif isinstance(p, (And, Or, Implies, Iff)):
            go(p.left, bound)
            go(p.right, bound)

    go(phi, frozenset())
    return out


# -- evaluation ----------------------------------------------------------


def domain(M: Structure, decl: VarDecl, env: dict) -> tuple:
    """The fiber a declared variable ranges over under ``env``."""
    gens = M.signature.sort(decl.sort).generators
    if not gens:
        return M.carriers[decl.sort]
    args = dict(decl.args)
    return M.over_generators(decl.sort, tuple(env[args[g.label]] for g in gens))


_UNSET = object()


def _domain_fn(M: Structure, sort: SortId, args) -> Callable[[dict], tuple]:
    gens = M.signature.sort(sort).generators
    if not gens:
        carrier = tuple(M.carriers[sort])
        return lambda env: carrier
    by_label = dict(args)
    names = tuple(by_label[g.label] for g in gens)
    over = M._generator_index(sort)[1]
    if len(names) == 1:
        (v,) = names
        return lambda env: over.get((env[v],), ())
    return lambda env: over.get(tuple([env[v] for v in names]), ())


def _compile(M: Structure, phi: Formula) -> Callable[[dict], bool]:
    """Turn an elaborated formula into a closure over a mutable environment."""
    if isinstance(phi, Top):
        return lambda env: True
    if isinstance(phi, Bot):
        return lambda env: False
    if isinstance(phi, Not):
        body = _compile(M, phi.body)
        return lambda env: not body(env)
    if isinstance(phi, (And, Or, Implies, Iff)):
        left, right = _compile(M, phi.left), _compile(M, phi.right)
        if isinstance(phi, And):
            return lambda env: left(env) and right(env)
        if isinstance(phi, Or):
            return lambda env: left(env) or right(env)
        if isinstance(phi, Implies):
            return lambda env: (not left(env)) or right(env)
        return lambda env: left(env) == right(env)
    if isinstance(phi, (Forall, Exists)):
        dom = _domain_fn(M, phi.var.sort, phi.var.args)
        body = _compile(M, phi.body)
        name = phi.var.name
        # forall stops at the first False, exists at the first True
        stop = isinstance(phi, Exists)

        def quantify(env: dict) -> bool:
            saved = env.get(name, _UNSET)
            try:
                for e in dom(env):
                    env[name] = e
                    if body(env) is stop:
                        return stop
                return not stop
            finally:
                if saved is _UNSET:
                    env.pop(name, None)
                else:
                    env[name] = saved

        return quantify
    if isinstance(phi, Inhabited):
        dom = _domain_fn(M, phi.sort, phi.args)
        return lambda env: bool(dom(env))
    if isinstance(phi, Equal):
        a, b = phi.left, phi.right
        return lambda env: env[a] == env[b]
    raise TypeError(f"not a formula: {phi!r}")


def evaluate(M: Structure, phi: Formula, env: dict | None = None) -> bool:
    """Classical truth value of an elaborated formula in ``M``."""
    return bool(_compile(M, phi)(dict(env or {})))


def _prefix(phi: Formula) -> tuple[list[VarDecl], Formula]:
    decls = []
    while isinstance(phi, Forall):
        decls.append(phi.var)
        phi = phi.body
    return decls, phi


def _conjuncts(phi: Formula) -> list[Formula]:
    if isinstance(phi, And):
        return _conjuncts(phi.left) + _conjuncts(phi.right)
    return [phi]


def countermodel(M: Structure, phi: Formula) -> dict | None:
    """First assignment to the leading universal prefix falsifying the body.

    Returns ``None`` when ``phi`` holds and ``{}`` when it fails without a
    universal prefix.  When the body is an implication, each conjunct of the
    premise is tested as soon as its variables are bound and a false one
    prunes the rest of the prefix.
    """
    decls, body = _prefix(phi)
    position = {d.name: i for i, d in enumerate(decls)}
    guards: list[list] = [[] for _ in range(len(decls) + 1)]
    if isinstance(body, Implies):
        for part in _conjuncts(body.left):
            depth = max((position[v] + 1 for v in free_variables(part) if v in position), default=0)
            guards[depth].append(_compile(M, part))
        test = _compile(M, body.right)
    else:
        test = _compile(M, body)
    doms = [(d.name, _domain_fn(M, d.sort, d.args)) for d in decls]
    last = len(doms)
    env: dict = {}

    def search(i: int) -> bool:
        for guard in guards[i]:
            if not guard(env):
                return False
        if i == last:
            return not test(env)
        name, dom = doms[i]
        for e in dom(env):
            env[name] = e
            if search(i + 1):
                return True
        env.pop(name, None)
        return False

    return dict(env) if search(0) else None


@dataclass
class AxiomResult:
    name: str
    holds: bool
    countermodel: dict | None = None


@dataclass
class TheoryReport:
    theory: str
    results: list[AxiomResult]

    @property
    def ok(self) -> bool:
        return all(r.holds for r in self.results)

    def verdicts(self) -> dict[str, bool]:
        return {r.name: r.holds for r in self.results}

    def failed(self) -> list[AxiomResult]:
        return [r for r in self.results if not r.holds]


def check_theory(M: Structure, T: Theory) -> TheoryReport:
    """Evaluate every axiom of ``T`` in ``M``; failures carry a countermodel."""
    if M.signature != T.signature:
        raise ValueError(f"structure is over {M.signature.name}, theory over {T.signature.name}")
    results = []
    for name, phi in T.axioms:
        cm = countermodel(M, phi)
        results.append(AxiomResult(name, cm is None, cm))
    return TheoryReport(T.name, results)


@dataclass
class InvarianceReport:
    applicable: bool
    reason: str = ""
    discrepancies: list = field(default_factory=list)
    verdicts: dict = field(default_factory=dict)

    @property
    def agree(self) -> bool:
        return self.applicable and not self.discrepancies


def invariance_check(T: Theory, M: Structure, N: Structure, f, *, budget: int | None = None) -> InvarianceReport:
    """Between univalent structures related by a split-surjective
    equivalence, every axiom has the same truth value on both sides.

    A discrepancy means an implementation bug and is reported as such.
    """
    from .indiscernibility import is_univalent
    from .morphisms import is_sse, validate_morphism

    if not validate_morphism(f).ok:
        return InvarianceReport(False, "f is not a morphism of structures")
    for label, S in (("M", M), ("N", N)):
        if not is_univalent(S, budget=budget):
            return InvarianceReport(False, f"not applicable: {label} is not univalent")
    if not is_sse(f):
        return InvarianceReport(False, "not applicable: f is not a split-surjective equivalence")
    vm = check_theory(M, T).verdicts()
    vn = check_theory(N, T).verdicts()
    verdicts = {n: (vm[n], vn[n]) for n in vm}
    bad = [n for n, (x, y) in verdicts.items() if x != y]
    return InvarianceReport(True, "", bad, verdicts)

"""Finite FOLDS-signatures presented as inverse semi-categories.

A signature is a finite list of ranked sorts.  Each sort declares generating
arrows (``label: target``) that point to sorts of strictly smaller rank.  Path
equations identify composites.  Paths are written outside-in as in ``c.t0``
("c after t0") but stored internally in application order, so the first label
of :attr:`Arrow.path` is applied first.

Hom-sets are computed by enumerating all generator paths out of a sort (a
finite set, since ranks strictly decrease) and quotienting by the congruence
generated by the equations with a union-find.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass
from typing import Hashable, Iterable, Sequence

from .errors import (
    EndpointMismatchError,
    RankOutOfRangeError,
    SignatureError,
    UndefinedSortError,
    ValidationReport,
)

SortId = Hashable


@dataclass(frozen=True)
class Generator:
    label: str
    target: SortId


@dataclass(frozen=True)
class SortDecl:
    id: SortId
    rank: int
    generators: tuple[Generator, ...] = ()

    def generator(self, label: str) -> Generator | None:
        for g in self.generators:
            if g.label == label:
                return g
        return None

    @property
    def labels(self) -> tuple[str, ...]:
        return tuple(g.label for g in self.generators)


@dataclass(frozen=True)
class PathEquation:
    """``lhs = rhs`` between two generator paths out of ``source``.

    Both sides are stored outside-in, exactly as written (``("c", "t0")``
    for ``c.t0``).
    """

    source: SortId
    lhs: tuple[str, ...]
    rhs: tuple[str, ...]

    def __str__(self) -> str:
        return f"{'.'.join(self.lhs)} = {'.'.join(self.rhs)}"


@dataclass(frozen=True)
class Arrow:
    """An arrow of the semi-category: the canonical path of its class.

    ``path`` is in application order; ``str`` prints it outside-in.
    """

    source: SortId
    target: SortId
    path: tuple[str, ...]

    @property
    def outside_in(self) -> tuple[str, ...]:
        return tuple(reversed(self.path))

    def __str__(self) -> str:
        return ".".join(self.outside_in)


class _UnionFind:
    def __init__(self) -> None:
        self.parent: dict = {}

    def add(self, x) -> None:
        self.parent.setdefault(x, x)

    def find(self, x):
        root = x
        while self.parent[root] != root:
            root = self.parent[root]
        while self.parent[x] != root:
            self.parent[x], x = root, self.parent[x]
        return root

    def union(self, x, y) -> None:
        rx, ry = self.find(x), self.find(y)
        if rx != ry:
            self.parent[ry] = rx


@dataclass
class _HomTable:
    canonical: dict  # path -> canonical path
    targets: dict  # path -> target sort
    by_target: dict  # target -> sorted list of Arrow


class Signature:
    """A finite FOLDS-signature.

    Instances are treated as immutable.  Hom tables are computed lazily and
    cached behind a lock so a signature may be shared between threads.
    """

    def __init__(
        self,
        name: str,
        sorts: Iterable[SortDecl] = (),
        equations: Iterable[PathEquation] = (),
    ):
        self.name = name
        self.sorts: tuple[SortDecl, ...] = tuple(sorts)
        self.equations: tuple[PathEquation, ...] = tuple(equations)
        self._index: dict = {}
        self._order: dict = {}
        for i, s in enumerate(self.sorts):
            if s.id not in self._index:
                self._index[s.id] = s
                self._order[s.id] = i
        self._gen_index: dict = {}
        for s in self.sorts:
            for g in s.generators:
                self._gen_index.setdefault((s.id, g.label), len(self._gen_index))
        self._lock = threading.RLock()
        self._homs: dict = {}
        self._valid: ValidationReport | None = None
        self._fanouts: dict = {}
        self._hash: int | None = None
        self._memo: dict = {}  # derived data owned by other modules

    # -- identity -------------------------------------------------------
    def _key(self):
        return (self.name, self.sorts, self.equations)

    def __eq__(self, other) -> bool:
        if self is other:
            return True
        if not isinstance(other, Signature):
            return NotImplemented
        return self._key() == other._key()

    def __hash__(self) -> int:
        if self._hash is None:
            self._hash = hash(self._key())
        return self._hash

    def __repr__(self) -> str:
        return f"Signature({self.name!r}, {len(self.sorts)} sorts, {len(self.equations)} equations)"

    # -- basic queries ---------------------------------------------------
    def has_sort(self, K: SortId) -> bool:
        return K in self._index

    def sort(self, K: SortId) -> SortDecl:
        try:
            return self._index[K]
        except (KeyError, TypeError):
            raise UndefinedSortError(f"undefined sort {K!r} in signature {self.name}") from None

    def rank(self, K: SortId) -> int:
        return self.sort(K).rank

    def sort_ids(self) -> list:
        return [s.id for s in self.sorts]

    def sorts_of_rank(self, m: int) -> list:
        return [s.id for s in self.sorts if s.rank == m]

    def bottom_sorts(self) -> list:
        return self.sorts_of_rank(0)

    def order(self, K: SortId) -> int:
        return self._order[K]

    @property
    def height(self) -> int:
        return height(self)

    def generator(self, K: SortId, label: str) -> Generator:
        g = self.sort(K).generator(label)
        if g is None:
            raise SignatureError(f"sort {K} has no generator {label!r}")
        return g

    def walk(self, K: SortId, path: Sequence[str]) -> SortId:
        """Target of an application-order path out of ``K``."""
        cur = K
        for label in path:
            cur = self.generator(cur, label).target
        return cur

    def path_key(self, K: SortId, path: Sequence[str]) -> tuple[int, ...]:
        key = []
        cur = K
        for label in path:
            key.append(self._gen_index[(cur, label)])
            cur = self._index[cur].generator(label).target
        return tuple(key)

    # -- validation ------------------------------------------------------
    def ensure_valid(self) -> None:
        with self._lock:
            if self._valid is None:
                self._valid = validate_signature(self)
        if not self._valid.ok:
            raise SignatureError(f"invalid signature {self.name}:\n{self._valid}")

    # -- hom-sets --------------------------------------------------------
    def _table(self, K: SortId) -> _HomTable:
        with self._lock:
            table = self._homs.get(K)
            if table is None:
                self.ensure_valid()
                self.sort(K)
                table = self._build_table(K)
                self._homs[K] = table
            return table

    def _build_table(self, K: SortId) -> _HomTable:
        targets: dict = {}
        sorts_along: dict = {}
        stack: list = [((), K, (K,))]
        while stack:
            path, cur, along = stack.pop()
            if path:
                targets[path] = cur
                sorts_along[path] = along
            for g in self._index[cur].generators:
                stack.append((path + (g.label,), g.target, along + (g.target,)))
        uf = _UnionFind()
        for p in targets:
            uf.add(p)
        for eq in self.equations:
            lhs = tuple(reversed(eq.lhs))
            rhs = tuple(reversed(eq.rhs))
            n = len(lhs)
            for p, along in sorts_along.items():
                for i in range(len(p) - n + 1):
                    if along[i] == eq.source and p[i : i + n] == lhs:
                        q = p[:i] + rhs + p[i + n :]
                        if q in targets:
                            uf.union(p, q)
        classes: dict = {}
        for p in targets:
            classes.setdefault(uf.find(p), []).append(p)
        canonical: dict = {}
        by_target: dict = {}
        for members in classes.values():
            rep = min(members, key=lambda p: self.path_key(K, p))
            for p in members:
                canonical[p] = rep
            L = targets[rep]
            by_target.setdefault(L, []).append(Arrow(K, L, rep))
        for L in by_target:
            by_target[L].sort(key=lambda a: self.path_key(K, a.path))
        return _HomTable(canonical, targets, by_target)

    def arrow(self, K: SortId, path: Sequence[str]) -> Arrow:
        """The arrow (class) of an application-order path out of ``K``."""
        path = tuple(path)
        if not path:
            raise SignatureError("arrows are nonempty paths; semi-categories have no identities")
        table = self._table(K)
        if path not in table.canonical:
            self.walk(K, path)  # raises a precise error for a bad label
            raise SignatureError(f"path {'.'.join(reversed(path))} is not composable from {K}")
        rep = table.canonical[path]
        return Arrow(K, table.targets[rep], rep)

    def arrow_from_labels(self, K: SortId, outside_in: Sequence[str]) -> Arrow:
        return self.arrow(K, tuple(reversed(tuple(outside_in))))

    def hom_set(self, K: SortId, L: SortId) -> list[Arrow]:
        """All arrows ``K -> L`` in canonical order."""
        self.sort(L)
        return list(self._table(K).by_target.get(L, ()))

    def arrows_from(self, K: SortId) -> list[Arrow]:
        out = []
        table = self._table(K)
        for L in sorted(table.by_target, key=self.order):
            out.extend(table.by_target[L])
        return out

    def compose(self, f: Arrow, g: Arrow) -> Arrow:
        """``g`` after ``f`` for ``f: K -> L`` and ``g: L -> N``."""
        if f.target != g.source:
            raise EndpointMismatchError(f"cannot compose {f} : {f.source}->{f.target} with {g} : {g.source}->{g.target}")
        return self.arrow(f.source, f.path + g.path)

    def fanout(self, K: SortId, m: int) -> list[tuple[SortId, Arrow]]:
        """Pairs ``(L, f)`` with ``rank(L) = m`` and ``f: K -> L``."""
        r = self.rank(K)
        if not 0 <= m < r:
            raise RankOutOfRangeError(f"fanout rank {m} out of range for sort {K} of rank {r}")
        key = (K, m)
        cached = self._fanouts.get(key)
        if cached is not None:
            return list(cached)
        out = []
        by_target = self._table(K).by_target
        for s in self.sorts:
            if s.rank == m and s.id in by_target:
                out.extend((s.id, a) for a in by_target[s.id])
        with self._lock:
            self._fanouts[key] = tuple(out)
        return out

    def full_fanout(self, K: SortId) -> list[tuple[SortId, Arrow]]:
        out = []
        for m in range(self.rank(K)):
            out.extend(self.fanout(K, m))
        return out


def height(sig: Signature) -> int:
    if not sig.sorts:
        return 0
    return 1 + max(s.rank for s in sig.sorts)


def hom_set(sig: Signature, K: SortId, L: SortId) -> list[Arrow]:
    return sig.hom_set(K, L)


def compose(sig: Signature, f: Arrow, g: Arrow) -> Arrow:
    return sig.compose(f, g)


def fanout(sig: Signature, K: SortId, m: int) -> list[tuple[SortId, Arrow]]:
    return sig.fanout(K, m)


def _check_path(sig: Signature, source: SortId, outside_in: Sequence[str], report: ValidationReport, where: str):
    if not outside_in:
        report.add("equation-empty-path", f"{where}: empty path")
        return None
    cur = source
    for label in reversed(tuple(outside_in)):
        decl = sig._index.get(cur)
        g = decl.generator(label) if decl is not None else None
        if g is None:
            report.add("equation-bad-path", f"{where}: sort {cur} has no generator {label!r}")
            return None
        cur = g.target
        if cur not in sig._index:
            return None
    return cur


def validate_signature(sig: Signature) -> ValidationReport:
    """Collect every well-formedness violation of ``sig``.

    An empty report means the signature is a valid FOLDS-signature.
    """
    report = ValidationReport()
    seen = set()
    for s in sig.sorts:
        if s.id in seen:
            report.add("duplicate-sort", f"sort {s.id} declared more than once", s.id)
        seen.add(s.id)
        if not isinstance(s.rank, int) or s.rank < 0:
            report.add("bad-rank", f"sort {s.id} has rank {s.rank!r}; ranks are natural numbers", s.id)
    for s in sig.sorts:
        labels = set()
        for g in s.generators:
            if g.label in labels:
                report.add("duplicate-label", f"sort {s.id} declares generator {g.label!r} twice", s.id)
            labels.add(g.label)
            target = sig._index.get(g.target)
            if target is None:
                report.add("dangling-target", f"generator {s.id}.{g.label} targets undeclared sort {g.target}", s.id)
            elif isinstance(s.rank, int) and isinstance(target.rank, int) and target.rank >= s.rank:
                report.add(
                    "rank-violation",
                    f"generator {g.label}: {s.id} -> {g.target} does not decrease rank ({s.rank} -> {target.rank})",
                    s.id,
                )
    if not report.ok:
        # equations cannot be checked reliably against a broken sort graph
        for eq in sig.equations:
            if eq.source not in sig._index:
                report.add("equation-unknown-sort", f"equation {eq} has undeclared source {eq.source}", eq)
        return report
    for eq in sig.equations:
        if eq.source not in sig._index:
            report.add("equation-unknown-sort", f"equation {eq} has undeclared source {eq.source}", eq)
            continue
        lt = _check_path(sig, eq.source, eq.lhs, report, f"equation {eq}")
        rt = _check_path(sig, eq.source, eq.rhs, report, f"equation {eq}")
        if lt is not None and rt is not None and lt != rt:
            report.add(
                "equation-endpoint-mismatch",
                f"equation {eq} relates paths with targets {lt} and {rt}",
                eq,
            )
    return report


def make_signature(name: str, sorts: Sequence[tuple], equations: Sequence[tuple] = ()) -> Signature:
    """Convenience builder.

    ``sorts`` holds ``(id, rank, [(label, target), ...])`` triples and
    ``equations`` holds ``(source, "c.t0", "d.t1")`` triples.  The result is
    validated; a :class:`SignatureError` lists every violation.
    """
    decls = [SortDecl(sid, rank, tuple(Generator(l, t) for l, t in gens)) for sid, rank, gens in sorts]
    eqs = [PathEquation(src, tuple(lhs.split(".")), tuple(rhs.split("."))) for src, lhs, rhs in equations]
    sig = Signature(name, decls, eqs)
    sig.ensure_valid()
    return sig

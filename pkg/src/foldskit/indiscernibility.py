"""Indiscernibilities between elements and univalence of finite structures.

An indiscernibility ``a ⋍ b`` at a rank-0 sort ``K`` is an isomorphism of the
partial structures ``∂ₐM ≅ ∂_bM`` over the joker-extended derivative that is
the identity on every joker-free derived sort.  Only the jokered sorts carry
data, so the search assigns bijections there, in increasing rank, and checks
naturality as it goes.

Over finite sets every identity type is a proposition, so univalence becomes a
counting condition: exactly one self-indiscernibility per element and none
between distinct elements, at every rank-0 sort of every iterated derivative.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, field
from itertools import permutations, product
from typing import Any, Iterator

from .derivation import BottomFamily, DerivedSort, derive_signature, derive_structure, joker_extend, partial_structure
from .errors import BoundaryMismatchError, BudgetExhausted, DerivationError, UnknownElementError
from .signature import SortId
from .structure import Structure

DEFAULT_BUDGET = 10**7


def default_budget() -> int:
    raw = os.environ.get("FOLDSKIT_BUDGET")
    if raw:
        try:
            return int(raw)
        except ValueError:
            pass
    return DEFAULT_BUDGET


@dataclass
class Indiscernibility:
    """A family of fiberwise bijections on the jokered derived sorts.

    ``maps`` only lists jokered sorts with nonempty fibers; every other sort
    carries the identity.
    """

    sort: SortId
    source: Any
    target: Any
    maps: dict[SortId, dict] = field(default_factory=dict)

    def __call__(self, S: SortId, x):
        m = self.maps.get(S)
        if m is None:
            return x
        return m[x]

    def at(self, S: SortId) -> dict:
        return dict(self.maps.get(S, {}))

    def is_identity(self) -> bool:
        return all(k == v for m in self.maps.values() for k, v in m.items())

    def describe(self) -> dict:
        return {str(S): {str(k): str(v) for k, v in m.items()} for S, m in self.maps.items()}


class _Setup:
    """Per (structure, sort) data shared by all searches at that sort."""

    def __init__(self, M: Structure, K: SortId):
        fam = BottomFamily.from_structure(M)
        self.extended, self.joker = joker_extend(fam, K)
        self.D = derive_signature(M.signature, self.extended)
        targeted = {g.target for s in self.D.sorts for g in s.generators}
        self.jokered = [s for s in sorted(self.D.sorts, key=lambda s: s.rank) if s.id.has_joker]
        self.is_jokered = {s.id for s in self.jokered}
        self.leaf = {s.id: s.id not in targeted for s in self.jokered}
        self.gens = {s.id: [(g.label, g.target, g.target in self.is_jokered) for g in s.generators] for s in self.jokered}


def _setup(M: Structure, K: SortId) -> _Setup:
    key = ("indisc-setup", K)
    hit = M.cache.get(key)
    if hit is None:
        hit = _Setup(M, K)
        M.cache[key] = hit
    return hit


class _Search:
    def __init__(self, M: Structure, K: SortId, a, b, budget: int | None):
        if M.signature.rank(K) != 0:
            raise DerivationError(f"indiscernibilities are computed at rank-0 sorts; use indiscernibilities_at for {K}")
        for x in (a, b):
            if not M.contains(K, x):
                raise UnknownElementError(f"{x!r} is not an element of {K}")
        self.K, self.a, self.b = K, a, b
        self.setup = _setup(M, K)
        self.Pa = partial_structure(M, K, a)
        self.Pb = partial_structure(M, K, b)
        self.budget = default_budget() if budget is None else budget
        self.nodes = 0
        st = self.setup
        self.active = []
        self.feasible = True
        for s in st.jokered:
            na, nb = len(self.Pa.carriers[s.id]), len(self.Pb.carriers[s.id])
            if na != nb:
                self.feasible = False
                return
            if na:
                self.active.append(s.id)
        self.phi: dict = {S: {} for S in self.active}
        self.used: dict = {S: set() for S in self.active}
        self.variables = [(S, x) for S in self.active if not st.leaf[S] for x in self.Pa.carriers[S]]
        self.leaves = [S for S in self.active if st.leaf[S]]
        # watchers: each element waits for its jokered generator images
        self.pending: dict = {}
        self.watchers: dict = {}
        self.classes: dict = {}
        for S in self.active:
            for x in self.Pa.carriers[S]:
                n = 0
                for label, T, jok in st.gens[S]:
                    if jok:
                        n += 1
                        y = self.Pa.act(S, label, x)
                        self.watchers.setdefault((T, y), []).append((S, x))
                self.pending[(S, x)] = n
                if n == 0 and not self._resolve(S, x, []):
                    self.feasible = False
                    return

    def _need(self, S, x) -> tuple:
        out = []
        for label, T, jok in self.setup.gens[S]:
            y = self.Pa.act(S, label, x)
            out.append(self.phi[T][y] if jok else y)
        return tuple(out)

    def _resolve(self, S, x, trail) -> bool:
        need = self._need(S, x)
        key = (S, need)
        c = self.classes.get(key, 0) + 1
        self.classes[key] = c
        trail.append(("class", key))
        return c <= len(self.Pb.over_generators(S, need))

    def _assign(self, S, x, y, trail) -> bool:
        self.phi[S][x] = y
        self.used[S].add(y)
        trail.append(("phi", S, x, y))
        ok = True
        for W in self.watchers.get((S, x), ()):
            self.pending[W] -= 1
            trail.append(("pending", W))
            if self.pending[W] == 0 and not self._resolve(W[0], W[1], trail):
                ok = False
        return ok

    def _undo(self, trail) -> None:
        while trail:
            item = trail.pop()
            if item[0] == "phi":
                _, S, x, y = item
                del self.phi[S][x]
                self.used[S].discard(y)
            elif item[0] == "pending":
                self.pending[item[1]] += 1
            else:
                self.classes[item[1]] -= 1

    def _tick(self) -> None:
        self.nodes += 1
        if self.nodes > self.budget:
            raise BudgetExhausted(self.budget)

    def _candidates(self, S, x) -> list:
        pool = self.Pb.over_generators(S, self._need(S, x))
        used = self.used[S]
        first = [x] if x in pool and x not in used else []
        return first + [y for y in pool if y != x and y not in used]

    def _leaf_groups(self, S) -> list[tuple[list, list]]:
        groups: dict = {}
        for x in self.Pa.carriers[S]:
            groups.setdefault(self._need(S, x), []).append(x)
        out = []
        for need, xs in groups.items():
            ys = list(self.Pb.over_generators(S, need))
            if set(xs) == set(ys):
                ys = list(xs)
            out.append((xs, ys))
        return out

    def count(self, limit: int | None = None) -> int:
        if not self.feasible:
            return 0
        total = 0

        def leaf_count() -> int:
            n = 1
            for S in self.leaves:
                for xs, ys in self._leaf_groups(S):
                    if len(xs) != len(ys):
                        return 0
                    n *= math.factorial(len(xs))
            return n

        def go(i: int) -> bool:
            nonlocal total
            if i == len(self.variables):
                total += leaf_count()
                return limit is not None and total >= limit
            S, x = self.variables[i]
            for y in self._candidates(S, x):
                self._tick()
                trail: list = []
                if self._assign(S, x, y, trail) and go(i + 1):
                    self._undo(trail)
                    return True
                self._undo(trail)
            return False

        go(0)
        return total if limit is None else min(total, limit)

    def enumerate(self, limit: int | None = None) -> list[Indiscernibility]:
        if not self.feasible:
            return []
        out: list[Indiscernibility] = []

        def leaves() -> Iterator[dict]:
            blocks = []
            for S in self.leaves:
                for xs, ys in self._leaf_groups(S):
                    if len(xs) != len(ys):
                        return
                    blocks.append((S, xs, list(permutations(ys))))
            for choice in product(*(b[2] for b in blocks)):
                maps: dict = {}
                for (S, xs, _), ys in zip(blocks, choice):
                    maps.setdefault(S, {}).update(zip(xs, ys))
                yield maps

        def go(i: int) -> bool:
            if i == len(self.variables):
                for leaf_maps in leaves():
                    self._tick()
                    maps = {S: dict(self.phi[S]) for S in self.active if not self.setup.leaf[S]}
                    maps.update(leaf_maps)
                    ordered = {S: {x: maps[S][x] for x in self.Pa.carriers[S]} for S in self.active}
                    out.append(Indiscernibility(self.K, self.a, self.b, ordered))
                    if limit is not None and len(out) >= limit:
                        return True
                return False
            S, x = self.variables[i]
            for y in self._candidates(S, x):
                self._tick()
                trail: list = []
                if self._assign(S, x, y, trail) and go(i + 1):
                    self._undo(trail)
                    return True
                self._undo(trail)
            return False

        go(0)
        return out


def indiscernibilities(
    M: Structure, K: SortId, a, b, *, limit: int | None = None, budget: int | None = None
) -> list[Indiscernibility]:
    """All indiscernibilities ``a ⋍ b`` at the rank-0 sort ``K``.

    When ``a == b`` the identity comes first.  ``limit`` stops the search
    early; ``budget`` caps the number of search nodes.
    """
    return _Search(M, K, a, b, budget).enumerate(limit)


def count_indiscernibilities(
    M: Structure, K: SortId, a, b, *, limit: int | None = None, budget: int | None = None
) -> int:
    """Number of indiscernibilities, without materializing them."""
    return _Search(M, K, a, b, budget).count(limit)


def identity_indiscernibility(M: Structure, K: SortId, a) -> Indiscernibility:
    if not M.contains(K, a):
        raise UnknownElementError(f"{a!r} is not an element of {K}")
    st = _setup(M, K)
    P = partial_structure(M, K, a)
    maps = {s.id: {x: x for x in P.carriers[s.id]} for s in st.jokered if P.carriers[s.id]}
    return Indiscernibility(K, a, a, maps)


def compose_indiscernibilities(phi: Indiscernibility, psi: Indiscernibility) -> Indiscernibility:
    """``psi`` after ``phi``: a ⋍ b and b ⋍ c give a ⋍ c."""
    if phi.sort != psi.sort or phi.target != psi.source:
        raise ValueError("indiscernibilities are not composable")
    maps = {S: {x: psi(S, y) for x, y in m.items()} for S, m in phi.maps.items()}
    return Indiscernibility(phi.sort, phi.source, psi.target, maps)


def inverse_indiscernibility(phi: Indiscernibility) -> Indiscernibility:
    maps = {S: {y: x for x, y in m.items()} for S, m in phi.maps.items()}
    return Indiscernibility(phi.sort, phi.target, phi.source, maps)


def is_indiscernibility(M: Structure, phi: Indiscernibility) -> bool:
    """Check directly that ``phi`` is a natural bijection ``∂ₐM ≅ ∂_bM``
    that is the identity away from the joker."""
    st = _setup(M, phi.sort)
    Pa = partial_structure(M, phi.sort, phi.source)
    Pb = partial_structure(M, phi.sort, phi.target)
    for S in phi.maps:
        if S not in st.is_jokered:
            return False
    for s in st.jokered:
        A, B = Pa.carriers[s.id], Pb.carriers[s.id]
        m = phi.maps.get(s.id, {})
        if len(A) != len(B) or set(m) != set(A) or set(m.values()) != set(B):
            return False
    for s in st.jokered:
        for x in Pa.carriers[s.id]:
            for label, T, _ in st.gens[s.id]:
                if Pb.act(s.id, label, phi(s.id, x)) != phi(T, Pa.act(s.id, label, x)):
                    return False
    return True


def _lift(M: Structure, K: SortId, a, b) -> tuple[Structure, SortId]:
    """Derive ``M`` along the shared boundary of ``a`` and ``b`` until ``K``
    becomes a rank-0 sort."""
    sig = M.signature
    r = sig.rank(K)
    for x in (a, b):
        M.require(K, x)
    if r == 0:
        return M, K
    if M.full_boundary_tuple(K, a) != M.full_boundary_tuple(K, b):
        raise BoundaryMismatchError(f"{a!r} and {b!r} do not share a boundary at sort {K}")
    _, Mp = derive_structure(M)
    S = DerivedSort(K, M.boundary_tuple(K, a, 0))
    return _lift(Mp, S, a, b)


def indiscernibilities_at(
    M: Structure, K: SortId, a, b, *, limit: int | None = None, budget: int | None = None
) -> list[Indiscernibility]:
    """Indiscernibilities between elements of any rank that share a boundary."""
    N, S = _lift(M, K, a, b)
    return indiscernibilities(N, S, a, b, limit=limit, budget=budget)


def count_indiscernibilities_at(
    M: Structure, K: SortId, a, b, *, limit: int | None = None, budget: int | None = None
) -> int:
    N, S = _lift(M, K, a, b)
    return count_indiscernibilities(N, S, a, b, limit=limit, budget=budget)


# -- univalence ----------------------------------------------------------


@dataclass(frozen=True)
class Failure:
    sort: SortId
    a: Any
    b: Any
    count: int

    def describe(self) -> str:
        expected = 1 if self.a == self.b else 0
        return f"sort {self.sort}: |{self.a} ⋍ {self.b}| = {self.count}, expected {expected}"


@dataclass
class LevelReport:
    level: int
    sorts: list
    failures: list[Failure]

    @property
    def univalent(self) -> bool:
        return not self.failures


@dataclass
class UnivalenceReport:
    levels: list[LevelReport]

    @property
    def univalent(self) -> bool:
        return all(level.univalent for level in self.levels)

    @property
    def first_failure(self) -> Failure | None:
        for level in self.levels:
            if level.failures:
                return level.failures[0]
        return None


def univalence_failure_at(M: Structure, K: SortId, *, budget: int | None = None) -> Failure | None:
    """First pair (in canonical order) violating univalence at ``K``."""
    elems = M.carrier(K)
    for i, a in enumerate(elems):
        for b in elems[i:]:
            expected = 1 if a == b else 0
            n = count_indiscernibilities(M, K, a, b, limit=expected + 1, budget=budget)
            if n != expected:
                return Failure(K, a, b, n)
    return None


def is_univalent_at(M: Structure, K: SortId, *, budget: int | None = None) -> bool:
    return univalence_failure_at(M, K, budget=budget) is None


def univalence_report(M: Structure, *, budget: int | None = None, per_sort: bool = False) -> UnivalenceReport:
    """Check every rank-0 sort, then recurse on the derived structure.

    Each level records its first failing pair, or one failure per sort when
    ``per_sort`` is set.
    """
    levels = []
    cur = M
    level = 0
    while cur.signature.height > 0:
        failures = []
        sorts = cur.signature.bottom_sorts()
        for K in sorts:
            f = univalence_failure_at(cur, K, budget=budget)
            if f is not None:
                failures.append(f)
                if not per_sort:
                    break
        levels.append(LevelReport(level, sorts, failures))
        _, cur = derive_structure(cur)
        level += 1
    return UnivalenceReport(levels)


def is_univalent(M: Structure, *, budget: int | None = None) -> bool:
    return univalence_report(M, budget=budget).univalent


@dataclass
class TruncationReport:
    applicable: bool
    violations: list = field(default_factory=list)
    checked_sorts: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return self.applicable and not self.violations

    @property
    def status(self) -> str:
        if not self.applicable:
            return "not applicable"
        return "ok" if not self.violations else "violated"


def top_fiber_sizes(M: Structure) -> dict:
    """Sizes of the full fibers of every top-rank sort, keyed by (sort, boundary)."""
    sig = M.signature
    out: dict = {}
    if sig.height == 0:
        return out
    top = sig.height - 1
    for K in sig.sorts_of_rank(top):
        for e in M.carriers[K]:
            key = (K, M.full_boundary_tuple(K, e) if top > 0 else ())
            out[key] = out.get(key, 0) + 1
    return out


def truncation_report(M: Structure, *, budget: int | None = None) -> TruncationReport:
    """For univalent ``M``: every top-rank fiber has at most one element."""
    if not is_univalent(M, budget=budget):
        return TruncationReport(False)
    sig = M.signature
    sizes = top_fiber_sizes(M)
    violations = [(K, beta, n) for (K, beta), n in sizes.items() if n > 1]
    top = sig.sorts_of_rank(sig.height - 1) if sig.height else []
    return TruncationReport(True, violations, top)

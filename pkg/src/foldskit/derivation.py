"""Derivatives of signatures, joker extensions, partial structures, and
signature morphisms.

The derivative of a signature with respect to a bottom family ``fam`` has one
sort ``(K, alpha)`` for every sort ``K`` of positive rank and every assignment
``alpha`` of family elements to the rank-0 fanout of ``K``.  Its rank is one
less than that of ``K``.  A generator ``g: K -> L`` with ``rank(L) >= 1``
lifts to ``(K, alpha) -> (L, alpha . (- . g))`` under the same label.
"""

from __future__ import annotations

import itertools
import threading
from collections.abc import Mapping
from dataclasses import dataclass, field
from typing import Any, Hashable, Iterator

from .errors import DerivationError, MorphismError, UnknownElementError, ValidationReport
from .signature import Arrow, Generator, PathEquation, Signature, SortDecl, SortId
from .structure import Structure


@dataclass(frozen=True)
class Joker:
    """A fresh element adjoined to a bottom carrier.  Prints as ``★``."""

    tag: int = 0

    def __str__(self) -> str:
        return "★"

    def __repr__(self) -> str:
        return f"Joker({self.tag})"


@dataclass(frozen=True)
class DerivedSort:
    parent: SortId
    alpha: tuple

    def __post_init__(self) -> None:
        # derived sorts are dictionary keys everywhere; hash once
        object.__setattr__(self, "_hash", hash((self.parent, self.alpha)))

    def __hash__(self) -> int:
        return self._hash

    def __str__(self) -> str:
        return f"{self.parent}({','.join(str(a) for a in self.alpha)})"

    @property
    def has_joker(self) -> bool:
        return any(isinstance(a, Joker) for a in self.alpha)


def touches_joker(sort: SortId) -> bool:
    """Whether a (possibly iterated) derived sort mentions a joker."""
    return isinstance(sort, DerivedSort) and (sort.has_joker or touches_joker(sort.parent))


class BottomFamily(Mapping):
    """An immutable map from rank-0 sorts to ordered tuples of elements."""

    def __init__(self, items: Mapping[SortId, Any] | None = None):
        self._items = {K: tuple(v) for K, v in (items or {}).items()}
        self._hash: int | None = None

    @classmethod
    def from_structure(cls, M: Structure) -> "BottomFamily":
        return cls({K: M.carriers[K] for K in M.signature.bottom_sorts()})

    def __getitem__(self, K: SortId) -> tuple:
        return self._items[K]

    def __iter__(self) -> Iterator:
        return iter(self._items)

    def __len__(self) -> int:
        return len(self._items)

    def __hash__(self) -> int:
        if self._hash is None:
            self._hash = hash(tuple(self._items.items()))
        return self._hash

    def __eq__(self, other) -> bool:
        if isinstance(other, BottomFamily):
            return self._items == other._items
        return NotImplemented

    def __repr__(self) -> str:
        return "BottomFamily(" + "; ".join(f"{K}={{{','.join(map(str, v))}}}" for K, v in self._items.items()) + ")"

    def describe(self) -> str:
        return ";".join(f"{K}={{{','.join(map(str, v))}}}" for K, v in self._items.items())


@dataclass(frozen=True)
class FamilyMap:
    """A sortwise function between bottom families.

    ``maps[K]`` sends ``source[K]`` into ``target[image_sort(K)]``; the image
    sort is fixed by the signature morphism the map travels along.
    """

    source: BottomFamily
    target: BottomFamily
    maps: Mapping[SortId, Mapping]

    def __call__(self, K: SortId, x):
        return self.maps[K][x]

    def __hash__(self) -> int:
        return hash((self.source, self.target, tuple((K, tuple(m.items())) for K, m in self.maps.items())))


class DerivedSignature(Signature):
    """A signature obtained as a derivative; remembers its base and family."""

    def __init__(self, name, sorts, equations, base: Signature, family: BottomFamily):
        super().__init__(name, sorts, equations)
        self.base = base
        self.family = family


_derive_lock = threading.Lock()
_derive_cache: dict = {}


def derive_signature(sig: Signature, fam: Mapping) -> DerivedSignature:
    """The derivative of ``sig`` with respect to the bottom family ``fam``."""
    fam = fam if isinstance(fam, BottomFamily) else BottomFamily(fam)
    key = (sig, fam)
    with _derive_lock:
        hit = _derive_cache.get(key)
    if hit is not None:
        return hit
    sig.ensure_valid()
    missing = [K for K in sig.bottom_sorts() if K not in fam]
    if missing:
        raise DerivationError(f"family is missing rank-0 sorts: {', '.join(map(str, missing))}")
    sorts: list[SortDecl] = []
    equations: list[PathEquation] = []
    for s in sig.sorts:
        if s.rank < 1:
            continue
        entries = sig.fanout(s.id, 0)
        pools = [fam[L] for L, _ in entries]
        lifts = []
        for g in s.generators:
            if sig.rank(g.target) >= 1:
                lifts.append((g.label, g.target, _reindex(sig, s.id, g.label)))
        eqs = [eq for eq in sig.equations if eq.source == s.id and sig.rank(sig.walk(s.id, tuple(reversed(eq.lhs)))) >= 1]
        for alpha in itertools.product(*pools):
            K = DerivedSort(s.id, alpha)
            gens = tuple(Generator(label, DerivedSort(T, tuple(alpha[i] for i in idx))) for label, T, idx in lifts)
            sorts.append(SortDecl(K, s.rank - 1, gens))
            equations.extend(PathEquation(K, eq.lhs, eq.rhs) for eq in eqs)
    name = f"{sig.name}/{{{fam.describe()}}}"
    D = DerivedSignature(name, sorts, equations, base=sig, family=fam)
    with _derive_lock:
        _derive_cache.setdefault(key, D)
        return _derive_cache[key]


def _reindex(sig: Signature, K: SortId, label: str) -> tuple[int, ...]:
    """Positions in fanout(K, 0) of the composites ``h . g`` for h in fanout(target, 0)."""
    g = Arrow(K, sig.generator(K, label).target, (label,))
    position = {f: i for i, (_, f) in enumerate(sig.fanout(K, 0))}
    return tuple(position[sig.compose(g, h)] for _, h in sig.fanout(g.target, 0))


def shift_signature(sig: Signature) -> Signature:
    """The positive-rank part of ``sig`` with every rank lowered by one."""
    sorts = []
    for s in sig.sorts:
        if s.rank >= 1:
            gens = tuple(g for g in s.generators if sig.rank(g.target) >= 1)
            sorts.append(SortDecl(s.id, s.rank - 1, gens))
    eqs = [
        eq
        for eq in sig.equations
        if sig.rank(eq.source) >= 1 and sig.rank(sig.walk(eq.source, tuple(reversed(eq.lhs)))) >= 1
    ]
    return Signature(f"{sig.name}>0", sorts, eqs)


# -- signature morphisms -------------------------------------------------


@dataclass(eq=False)
class SigMorphism:
    """A rank-preserving semi-functor given on sorts and generators."""

    dom: Signature
    cod: Signature
    sort_map: Mapping[SortId, SortId]
    gen_map: Mapping[tuple[SortId, str], Arrow]
    name: str = field(default="", compare=False)
    _memo: dict = field(default_factory=dict, init=False, repr=False, compare=False)

    def __call__(self, K: SortId) -> SortId:
        return self.sort_map[K]

    def map_path(self, K: SortId, path) -> Arrow:
        image: tuple = ()
        cur = K
        for label in path:
            image += self.gen_map[(cur, label)].path
            cur = self.dom.generator(cur, label).target
        return self.cod.arrow(self.sort_map[K], image)

    def map_arrow(self, f: Arrow) -> Arrow:
        return self.map_path(f.source, f.path)

    def __eq__(self, other) -> bool:
        if not isinstance(other, SigMorphism):
            return NotImplemented
        return (
            self.dom == other.dom
            and self.cod == other.cod
            and dict(self.sort_map) == dict(other.sort_map)
            and dict(self.gen_map) == dict(other.gen_map)
        )

    __hash__ = None  # type: ignore[assignment]


def identity_morphism(sig: Signature) -> SigMorphism:
    hit = sig._memo.get("identity")
    if hit is not None:
        return hit
    hit = sig._memo["identity"] = SigMorphism(
        sig,
        sig,
        {s.id: s.id for s in sig.sorts},
        {(s.id, g.label): sig.arrow(s.id, (g.label,)) for s in sig.sorts for g in s.generators},
        name="id",
    )
    return hit


def compose_morphisms(G: SigMorphism, F: SigMorphism) -> SigMorphism:
    """``G`` after ``F``."""
    if F.cod != G.dom:
        raise MorphismError("signature morphisms are not composable")
    sort_map = {K: G.sort_map[F.sort_map[K]] for K in F.dom.sort_ids()}
    gen_map = {key: G.map_arrow(a) for key, a in F.gen_map.items()}
    return SigMorphism(F.dom, G.cod, sort_map, gen_map)


def validate_sig_morphism(H: SigMorphism) -> ValidationReport:
    report = ValidationReport()
    for s in H.dom.sorts:
        if s.id not in H.sort_map or not H.cod.has_sort(H.sort_map[s.id]):
            report.add("sort-map", f"sort {s.id} has no image in {H.cod.name}", s.id)
            continue
        if H.cod.rank(H.sort_map[s.id]) != s.rank:
            report.add("rank", f"sort {s.id} changes rank under the morphism", s.id)
    if not report.ok:
        return report
    for s in H.dom.sorts:
        for g in s.generators:
            a = H.gen_map.get((s.id, g.label))
            if a is None:
                report.add("gen-map", f"generator {s.id}.{g.label} has no image", (s.id, g.label))
            elif a.source != H.sort_map[s.id] or a.target != H.sort_map[g.target]:
                report.add("gen-map", f"image of {s.id}.{g.label} has wrong endpoints", (s.id, g.label))
    if not report.ok:
        return report
    for eq in H.dom.equations:
        lhs = H.map_path(eq.source, tuple(reversed(eq.lhs)))
        rhs = H.map_path(eq.source, tuple(reversed(eq.rhs)))
        if lhs != rhs:
            report.add("equation", f"equation {eq} at {eq.source} is not preserved", eq)
    return report


def is_discrete_opfibration(H: SigMorphism) -> bool:
    """True iff every induced fanout map is a bijection."""
    hit = H._memo.get("opfibration")
    if hit is None:
        hit = H._memo["opfibration"] = _fanouts_biject(H)
    return hit


def _fanouts_biject(H: SigMorphism) -> bool:
    for s in H.dom.sorts:
        HK = H.sort_map[s.id]
        for m in range(s.rank):
            image = [(H.sort_map[L], H.map_arrow(f)) for L, f in H.dom.fanout(s.id, m)]
            target = H.cod.fanout(HK, m)
            if len(set(image)) != len(image) or set(image) != set(target):
                return False
    return True


def derived_morphism(H: SigMorphism, h: FamilyMap) -> SigMorphism:
    """The functorial action of derivation on a discrete opfibration ``H``.

    Sends ``(K, alpha)`` to ``(H K, beta)`` with ``beta(F) = h(alpha(H^-1 F))``.
    """
    if not is_discrete_opfibration(H):
        raise DerivationError("derived_morphism requires a discrete opfibration")
    dom = derive_signature(H.dom, h.source)
    cod = derive_signature(H.cod, h.target)
    pulled = H._memo.get("pulled")
    if pulled is None:
        pulled = {}
        for s in H.dom.sorts:
            if s.rank < 1:
                continue
            entries = H.dom.fanout(s.id, 0)
            where = {(H.sort_map[L], H.map_arrow(f)): (i, L) for i, (L, f) in enumerate(entries)}
            pulled[s.id] = [where[F] for F in H.cod.fanout(H.sort_map[s.id], 0)]
        H._memo["pulled"] = pulled
    sort_map: dict = {}
    gen_map: dict = {}
    for s in dom.sorts:
        K, alpha = s.id.parent, s.id.alpha
        beta = tuple(h(L, alpha[i]) for i, L in pulled[K])
        sort_map[s.id] = DerivedSort(H.sort_map[K], beta)
    for s in dom.sorts:
        for g in s.generators:
            path = H.gen_map[(s.id.parent, g.label)].path
            gen_map[(s.id, g.label)] = cod.arrow(sort_map[s.id], path)
    return SigMorphism(dom, cod, sort_map, gen_map)


def forgetful_projection(sig: Signature, fam: Mapping) -> SigMorphism:
    """The projection ``(K, alpha) -> K`` onto the shifted signature."""
    D = derive_signature(sig, fam)
    S = shift_signature(sig)
    sort_map = {s.id: s.id.parent for s in D.sorts}
    gen_map = {
        (s.id, g.label): S.arrow(s.id.parent, (g.label,)) for s in D.sorts for g in s.generators
    }
    return SigMorphism(D, S, sort_map, gen_map, name="U")


def identity_family_map(fam: BottomFamily) -> FamilyMap:
    return FamilyMap(fam, fam, {K: {x: x for x in fam[K]} for K in fam})


# -- structures ----------------------------------------------------------


def pullback_structure(alpha: SigMorphism, N: Structure) -> Structure:
    """Restrict ``N`` along ``alpha``: carriers ``N(alpha K)``."""
    if N.signature != alpha.cod:
        raise MorphismError("pullback: structure is not over the morphism's codomain")
    carriers = {s.id: N.carriers[alpha.sort_map[s.id]] for s in alpha.dom.sorts}
    actions: dict = {}
    for s in alpha.dom.sorts:
        per = {}
        for g in s.generators:
            f = alpha.gen_map[(s.id, g.label)]
            per[g.label] = {e: N.act_arrow(f, e) for e in carriers[s.id]}
        actions[s.id] = per
    return Structure(alpha.dom, carriers, actions, name=f"pullback of {N.name or '?'}")


def derive_structure(M: Structure) -> tuple[BottomFamily, Structure]:
    """Split ``M`` into its bottom family and derived structure."""
    hit = M.cache.get("derive")
    if hit is not None:
        return hit
    sig = M.signature
    fam = BottomFamily.from_structure(M)
    D = derive_signature(sig, fam)
    carriers: dict = {}
    actions: dict = {}
    partitions = {K: M.fiber0_partition(K) for K in sig.sort_ids() if sig.rank(K) >= 1}
    for s in D.sorts:
        K, alpha = s.id.parent, s.id.alpha
        elems = partitions[K].get(alpha, ())
        carriers[s.id] = elems
        actions[s.id] = {g.label: {e: M.act(K, g.label, e) for e in elems} for g in s.generators}
    out = (fam, Structure(D, carriers, actions, name=f"{M.name or '?'}'"))
    M.cache["derive"] = out
    return out


def joker_extend(fam: Mapping, K: SortId) -> tuple[BottomFamily, Joker]:
    """Adjoin a fresh joker to ``fam[K]``."""
    fam = fam if isinstance(fam, BottomFamily) else BottomFamily(fam)
    if K not in fam:
        raise DerivationError(f"{K} is not a rank-0 sort of the family")
    used = sum(1 for L in fam for x in fam[L] if isinstance(x, Joker))
    j = Joker(used)
    items = {L: (fam[L] + (j,) if L == K else fam[L]) for L in fam}
    return BottomFamily(items), j


def point_family_map(extended: BottomFamily, base: BottomFamily, K: SortId, joker: Joker, a) -> FamilyMap:
    """The map ``<1, a>`` sending the joker to ``a`` and fixing everything else."""
    maps = {L: {x: (a if x == joker else x) for x in extended[L]} for L in extended}
    return FamilyMap(extended, base, maps)


def inclusion_family_map(base: BottomFamily, extended: BottomFamily) -> FamilyMap:
    return FamilyMap(base, extended, {L: {x: x for x in base[L]} for L in base})


def partial_structure(M: Structure, K: SortId, a) -> Structure:
    """``∂ₐM``: the derived structure over the joker extension at ``K``,
    with carrier ``fiber0(M, L, beta[★ ↦ a])`` at ``(L, beta)``."""
    sig = M.signature
    if sig.rank(K) != 0:
        raise DerivationError(f"partial structures are taken at rank-0 sorts; {K} has rank {sig.rank(K)}")
    if not M.contains(K, a):
        raise UnknownElementError(f"{a!r} is not an element of {K}")
    key = ("partial", K, a)
    hit = M.cache.get(key)
    if hit is not None:
        return hit
    fam = BottomFamily.from_structure(M)
    ext, j = joker_extend(fam, K)
    D = derive_signature(sig, ext)
    partitions = {L: M.fiber0_partition(L) for L in sig.sort_ids() if sig.rank(L) >= 1}
    carriers: dict = {}
    actions: dict = {}
    for s in D.sorts:
        L = s.id.parent
        beta = tuple(a if x == j else x for x in s.id.alpha)
        elems = partitions[L].get(beta, ())
        carriers[s.id] = elems
        actions[s.id] = {g.label: {e: M.act(L, g.label, e) for e in elems} for g in s.generators}
    P = Structure(D, carriers, actions, name=f"∂_{a}({M.name or '?'})")
    M.cache[key] = P
    return P


def partial_structure_via_pullback(M: Structure, K: SortId, a) -> Structure:
    """The same structure computed as a pullback along ``∂<1, a>``."""
    fam, Mp = derive_structure(M)
    ext, j = joker_extend(fam, K)
    point = point_family_map(ext, fam, K, j, a)
    H = derived_morphism(identity_morphism(M.signature), point)
    return pullback_structure(H, Mp)

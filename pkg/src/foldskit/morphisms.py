"""Morphisms of structures and the ladder of equivalence notions.

* isomorphisms: levelwise bijections;
* split-surjective equivalences (sse): surjective on every fiber over every
  boundary, at every rank.  Over finite sets a surjection always has a
  section, so "split" adds nothing and is not implemented separately;
* equivalences relative to a discrete opfibration: surjective only up to
  indiscernibility in the codomain, level by level.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any

from .derivation import (
    BottomFamily,
    FamilyMap,
    SigMorphism,
    compose_morphisms,
    derive_structure,
    derived_morphism,
    identity_morphism,
    pullback_structure,
)
from .errors import BudgetExhausted, MorphismError, ValidationReport
from .indiscernibility import count_indiscernibilities, default_budget, is_univalent
from .signature import SortId
from .structure import Structure


@dataclass(eq=False)
class StructureMorphism:
    source: Structure
    target: Structure
    maps: dict[SortId, dict]

    def __call__(self, K: SortId, x):
        return self.maps[K][x]

    def __eq__(self, other) -> bool:
        if not isinstance(other, StructureMorphism):
            return NotImplemented
        return self.source == other.source and self.target == other.target and self.maps == other.maps

    __hash__ = None  # type: ignore[assignment]

    def describe(self) -> dict:
        return {str(K): {str(x): str(y) for x, y in m.items()} for K, m in self.maps.items()}


def identity_structure_morphism(M: Structure) -> StructureMorphism:
    return StructureMorphism(M, M, {K: {x: x for x in M.carriers[K]} for K in M.signature.sort_ids()})


def compose_structure_morphisms(g: StructureMorphism, f: StructureMorphism) -> StructureMorphism:
    """``g`` after ``f``."""
    maps = {K: {x: g.maps[K][y] for x, y in m.items()} for K, m in f.maps.items()}
    return StructureMorphism(f.source, g.target, maps)


def validate_morphism(f: StructureMorphism) -> ValidationReport:
    """Empty iff ``f`` is total, lands in the target, and is natural."""
    report = ValidationReport()
    M, N = f.source, f.target
    if M.signature != N.signature:
        report.add("signature-mismatch", "source and target are over different signatures")
        return report
    sig = M.signature
    for K in sig.sort_ids():
        m = f.maps.get(K, {})
        for x in M.carriers[K]:
            if x not in m:
                report.add("partial", f"map at {K} is undefined on {x!r}", (K, x))
            elif not N.contains(K, m[x]):
                report.add("dangling", f"map at {K} sends {x!r} outside the target carrier", (K, x))
    if not report.ok:
        return report
    for s in sig.sorts:
        for g in s.generators:
            for x in M.carriers[s.id]:
                lhs = N.act(s.id, g.label, f.maps[s.id][x])
                rhs = f.maps[g.target][M.act(s.id, g.label, x)]
                if lhs != rhs:
                    report.add(
                        "naturality",
                        f"naturality fails at {s.id}.{g.label} on {x!r}: {lhs!r} != {rhs!r}",
                        (s.id, g.label, x),
                    )
    return report


def enumerate_morphisms(
    M: Structure, N: Structure, *, budget: int | None = None, limit: int | None = None
) -> list[StructureMorphism]:
    """All morphisms ``M -> N`` by backtracking over elements in rank order."""
    if M.signature != N.signature:
        raise MorphismError("structures are over different signatures")
    sig = M.signature
    budget = default_budget() if budget is None else budget
    order = sorted(sig.sorts, key=lambda s: s.rank)
    variables = [(s.id, x) for s in order for x in M.carriers[s.id]]
    maps: dict = {s.id: {} for s in sig.sorts}
    out: list[StructureMorphism] = []
    nodes = 0

    def candidates(K, x):
        gens = sig.sort(K).generators
        if not gens:
            return N.carriers[K]
        need = tuple(maps[g.target][M.act(K, g.label, x)] for g in gens)
        return N.over_generators(K, need)

    def go(i: int) -> bool:
        nonlocal nodes
        if i == len(variables):
            out.append(StructureMorphism(M, N, {K: dict(m) for K, m in maps.items()}))
            return limit is not None and len(out) >= limit
        K, x = variables[i]
        for y in candidates(K, x):
            nodes += 1
            if nodes > budget:
                raise BudgetExhausted(budget)
            maps[K][x] = y
            if go(i + 1):
                return True
        maps[K].pop(x, None)
        return False

    go(0)
    return out


def is_iso(f: StructureMorphism) -> bool:
    for K in f.source.signature.sort_ids():
        m = f.maps[K]
        image = set(m.values())
        if len(image) != len(m) or image != set(f.target.carriers[K]):
            return False
    return True


def inverse_morphism(f: StructureMorphism) -> StructureMorphism:
    if not is_iso(f):
        raise MorphismError("only isomorphisms have inverses")
    return StructureMorphism(f.target, f.source, {K: {y: x for x, y in m.items()} for K, m in f.maps.items()})


def _bottom_family_map(f: StructureMorphism, fam_M: BottomFamily, fam_N: BottomFamily) -> FamilyMap:
    return FamilyMap(fam_M, fam_N, {K: {x: f.maps[K][x] for x in fam_M[K]} for K in fam_M})


def sse_failure(f: StructureMorphism, level: int = 0) -> tuple | None:
    """First place where ``f`` fails to be surjective, or ``None``."""
    M, N = f.source, f.target
    sig = M.signature
    if sig.height == 0:
        return None
    for K in sig.bottom_sorts():
        image = set(f.maps[K].values())
        for y in N.carriers[K]:
            if y not in image:
                return (level, K, y)
    fam_M, Mp = derive_structure(M)
    fam_N, Np = derive_structure(N)
    H = derived_morphism(identity_morphism(sig), _bottom_family_map(f, fam_M, fam_N))
    P = pullback_structure(H, Np)
    fp = StructureMorphism(Mp, P, {S: {x: f.maps[S.parent][x] for x in Mp.carriers[S]} for S in Mp.signature.sort_ids()})
    return sse_failure(fp, level + 1)


def is_sse(f: StructureMorphism) -> bool:
    """Split-surjective equivalence: every bottom map is surjective and the
    induced morphism into the pulled-back derived structure is again one."""
    return sse_failure(f) is None


def _nonempty_indisc(N: Structure, K: SortId, a, b, budget) -> bool:
    key = ("nonempty", K, a, b)
    hit = N.cache.get(key)
    if hit is None:
        hit = count_indiscernibilities(N, K, a, b, limit=1, budget=budget) > 0
        N.cache[key] = hit
    return hit


def equivalence_failure_rel(
    alpha: SigMorphism, M: Structure, N: Structure, f: StructureMorphism, *, budget: int | None = None, level: int = 0
) -> tuple | None:
    """First codomain element not reached up to indiscernibility, or ``None``.

    ``f`` sends each ``M(K)`` into ``N(alpha K)``.
    """
    sig = M.signature
    if sig.height == 0:
        return None
    for K in sig.bottom_sorts():
        AK = alpha.sort_map[K]
        for y in N.carriers[AK]:
            if not any(_nonempty_indisc(N, AK, f.maps[K][x], y, budget) for x in M.carriers[K]):
                return (level, AK, y)
    fam_M, Mp = derive_structure(M)
    fam_N, Np = derive_structure(N)
    pulled = BottomFamily({K: N.carriers[alpha.sort_map[K]] for K in sig.bottom_sorts()})
    h1 = FamilyMap(fam_M, pulled, {K: {x: f.maps[K][x] for x in fam_M[K]} for K in fam_M})
    h2 = FamilyMap(pulled, fam_N, {K: {y: y for y in pulled[K]} for K in pulled})
    step = compose_morphisms(derived_morphism(alpha, h2), derived_morphism(identity_morphism(sig), h1))
    fp = StructureMorphism(
        Mp,
        pullback_structure(step, Np),
        {S: {x: f.maps[S.parent][x] for x in Mp.carriers[S]} for S in Mp.signature.sort_ids()},
    )
    return equivalence_failure_rel(step, Mp, Np, fp, budget=budget, level=level + 1)


def is_equivalence_rel(
    alpha: SigMorphism, M: Structure, N: Structure, f: StructureMorphism, *, budget: int | None = None
) -> bool:
    return equivalence_failure_rel(alpha, M, N, f, budget=budget) is None


def is_equivalence(f: StructureMorphism, *, budget: int | None = None) -> bool:
    """Equivalence of structures: the relative notion along the identity."""
    return is_equivalence_rel(identity_morphism(f.source.signature), f.source, f.target, f, budget=budget)


@dataclass
class HsipReport:
    applicable: bool
    reason: str = ""
    morphisms: int = 0
    sse: int = 0
    isos: int = 0
    equivalences: int = 0
    counterexamples: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.counterexamples

    def as_dict(self) -> dict[str, Any]:
        return {
            "applicable": self.applicable,
            "reason": self.reason,
            "morphisms": self.morphisms,
            "sse": self.sse,
            "isos": self.isos,
            "equivalences": self.equivalences,
            "counterexamples": list(self.counterexamples),
        }


def hsip_check(M: Structure, N: Structure, *, budget: int | None = None) -> HsipReport:
    """Check the structure identity principle on all morphisms ``M -> N``.

    With ``M`` univalent, every sse must be a levelwise bijection and an
    equivalence.  With ``N`` univalent as well, every equivalence must be an
    sse.  Counterexamples point at implementation bugs.
    """
    if not is_univalent(M, budget=budget):
        return HsipReport(False, "hypothesis not met: M not univalent")
    n_univalent = is_univalent(N, budget=budget)
    report = HsipReport(True, "" if n_univalent else "N not univalent: equivalence-to-sse direction skipped")
    for i, f in enumerate(enumerate_morphisms(M, N, budget=budget)):
        report.morphisms += 1
        sse = is_sse(f)
        iso = is_iso(f)
        eqv = is_equivalence(f, budget=budget)
        report.sse += sse
        report.isos += iso
        report.equivalences += eqv
        if sse and not iso:
            report.counterexamples.append(f"morphism #{i} is an sse but not a bijection")
        if sse and not eqv:
            report.counterexamples.append(f"morphism #{i} is an sse but not an equivalence")
        if n_univalent and eqv and not sse:
            report.counterexamples.append(f"morphism #{i} is an equivalence between univalent structures but not an sse")
    return report

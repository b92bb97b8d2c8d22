"""Categories as explicit composition tables, and their structures.

Convention: ``compose[(f, g)]`` is ``g ∘ f`` ("f then g").  A category
becomes a structure over ``cat_E`` with ``T(t0=f, t1=g, t2=g∘f)``, an
identity witness ``I(i=1_x)`` per object and a diagonal ``E``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from itertools import permutations, product
from typing import Callable, Mapping, Sequence

from ..errors import FoldsError, ValidationReport
from ..structure import Structure


class CatalogError(FoldsError):
    pass


@dataclass
class CompositionTable:
    objects: tuple
    arrows: tuple  # (name, dom, cod)
    compose: dict  # (f, g) -> g∘f
    identities: dict  # object -> arrow
    name: str = field(default="", compare=False)

    def dom(self, f) -> str:
        return self._info()[f][0]

    def cod(self, f) -> str:
        return self._info()[f][1]

    def _info(self) -> dict:
        return {a: (d, c) for a, d, c in self.arrows}

    def hom(self, x, y) -> list:
        return [a for a, d, c in self.arrows if d == x and c == y]

    def composable(self) -> list[tuple]:
        info = self._info()
        return [(f, g) for f, _, _ in self.arrows for g, _, _ in self.arrows if info[f][1] == info[g][0]]


def validate_table(t: CompositionTable) -> ValidationReport:
    report = ValidationReport()
    info = {}
    for a, d, c in t.arrows:
        if a in info:
            report.add("duplicate-arrow", f"arrow {a} listed twice")
        if d not in t.objects or c not in t.objects:
            report.add("bad-endpoint", f"arrow {a} has an unknown endpoint")
        info[a] = (d, c)
    if not report.ok:
        return report
    pairs = t.composable()
    for f, g in pairs:
        h = t.compose.get((f, g))
        if h is None:
            report.add("missing-composite", f"no composite for ({f}, {g})")
        elif h not in info or info[h] != (info[f][0], info[g][1]):
            report.add("ill-typed-composite", f"composite of ({f}, {g}) is {h}, which has the wrong type")
    for key in t.compose:
        if key not in set(pairs):
            report.add("extra-composite", f"composite given for non-composable pair {key}")
    for x in t.objects:
        u = t.identities.get(x)
        if u is None or info.get(u) != (x, x):
            report.add("identity", f"object {x} has no identity endomorphism")
    if not report.ok:
        return report
    for f, (d, c) in info.items():
        if t.compose[(t.identities[d], f)] != f or t.compose[(f, t.identities[c])] != f:
            report.add("unit", f"identities are not units for {f}")
    for f, g in pairs:
        for h, _, _ in t.arrows:
            if info[g][1] == info[h][0]:
                if t.compose[(t.compose[(f, g)], h)] != t.compose[(f, t.compose[(g, h)])]:
                    report.add("assoc", f"associativity fails at ({f}, {g}, {h})")
    return report


def _cat_sig(signature: str = "cat_E"):
    from . import builtin_signature

    return builtin_signature(signature)


def category_elements(t: CompositionTable) -> dict:
    """The carrier-and-action description of a table (no validation)."""
    info = {a: (d, c) for a, d, c in t.arrows}
    return {
        "O": list(t.objects),
        "A": {a: {"d": d, "c": c} for a, d, c in t.arrows},
        "T": {f"t({f},{g})": {"t0": f, "t1": g, "t2": h} for (f, g), h in t.compose.items()},
        "I": {f"i({x})": {"i": t.identities[x]} for x in t.objects if x in t.identities},
        "E": {f"e({a})": {"e1": a, "e2": a} for a in info},
    }


def _structure(sig, elements: Mapping, name: str | None) -> Structure:
    carriers: dict = {}
    actions: dict = {}
    for K, spec in elements.items():
        if isinstance(spec, Mapping):
            carriers[K] = list(spec)
            per: dict = {}
            for e, images in spec.items():
                for label, img in images.items():
                    per.setdefault(label, {})[e] = img
            actions[K] = per
        else:
            carriers[K] = list(spec)
    return Structure(sig, carriers, actions, name=name)


def category_from_table(t: CompositionTable, name: str | None = None, *, check: bool = True) -> Structure:
    """The structure over ``cat_E`` presenting the category ``t``.

    With ``check=False`` the table is not required to satisfy the category
    laws (used to build mutated tables); the result must still be a functor.
    """
    if check:
        report = validate_table(t)
        if not report.ok:
            raise CatalogError(f"invalid composition table {t.name}:\n{report}")
    M = _structure(_cat_sig(), category_elements(t), name or t.name or None)
    M.ensure_valid()
    return M


def table_from_category(M: Structure) -> CompositionTable:
    """Recover the composition table from a category structure."""
    objects = tuple(M.carriers["O"])
    arrows = tuple((a, M.act("A", "d", a), M.act("A", "c", a)) for a in M.carriers["A"])
    compose: dict = {}
    for t in M.carriers["T"]:
        key = (M.act("T", "t0", t), M.act("T", "t1", t))
        h = M.act("T", "t2", t)
        if compose.setdefault(key, h) != h:
            raise CatalogError(f"two composites for {key}")
    identities: dict = {}
    for i in M.carriers["I"]:
        u = M.act("I", "i", i)
        x = M.act("A", "d", u)
        if identities.setdefault(x, u) != u:
            raise CatalogError(f"two identities at {x}")
    return CompositionTable(objects, arrows, compose, identities, name=M.name or "")


def oracle_isos(t: CompositionTable, a, b) -> list:
    """Arrows ``f: a -> b`` with a two-sided inverse, by exhaustive search."""
    out = []
    for f in t.hom(a, b):
        for g in t.hom(b, a):
            if t.compose[(f, g)] == t.identities[a] and t.compose[(g, f)] == t.identities[b]:
                out.append(f)
                break
    return out


def is_skeletal_with_trivial_automorphisms(t: CompositionTable) -> bool:
    """Every isomorphism is an identity (the univalent categories here)."""
    return all(len(oracle_isos(t, a, b)) == (1 if a == b else 0) for a in t.objects for b in t.objects)


# -- constructors -----------------------------------------------------------


def monoid_table(elements: Sequence[str], mult: Callable[[str, str], str], unit: str, name: str = "") -> CompositionTable:
    """One-object category; ``mult(x, y)`` is the product ``x·y`` and
    composition is ``g ∘ f = g·f``."""
    arrows = tuple((e, "*", "*") for e in elements)
    compose = {(f, g): mult(g, f) for f in elements for g in elements}
    return CompositionTable(("*",), arrows, compose, {"*": unit}, name=name)


def cyclic_group_table(n: int, names: Sequence[str] | None = None, name: str = "") -> CompositionTable:
    names = list(names) if names is not None else [str(i) for i in range(n)]
    idx = {x: i for i, x in enumerate(names)}
    return monoid_table(names, lambda x, y: names[(idx[x] + idx[y]) % n], names[0], name or f"Z{n}")


def z2_table() -> CompositionTable:
    return cyclic_group_table(2, ["e", "g"], "z2")


def poset_table(objects: Sequence[str], leq: set, name: str = "") -> CompositionTable:
    """The category of a preorder given as a set of pairs (reflexive pairs are added)."""
    rel = set(leq) | {(x, x) for x in objects}

    def arrow(x, y):
        return f"id_{x}" if x == y else f"{x}{y}"

    arrows = tuple((arrow(x, y), x, y) for x in objects for y in objects if (x, y) in rel)
    compose = {}
    for f, x, y in arrows:
        for g, y2, z in arrows:
            if y == y2:
                if (x, z) not in rel:
                    raise CatalogError("relation is not transitive")
                compose[(f, g)] = arrow(x, z)
    return CompositionTable(tuple(objects), arrows, compose, {x: arrow(x, x) for x in objects}, name=name)


def discrete_table(n: int = 3) -> CompositionTable:
    objs = "abcdefgh"[:n]
    return poset_table(objs, set(), f"discrete-{n}")


def linear_order_table(n: int = 3) -> CompositionTable:
    objs = "abcdefgh"[:n]
    return poset_table(objs, {(x, y) for i, x in enumerate(objs) for y in objs[i:]}, f"linear-order-{n}")


def walking_arrow_table() -> CompositionTable:
    arrows = (("id_a", "a", "a"), ("id_b", "b", "b"), ("f", "a", "b"))
    compose = {("id_a", "id_a"): "id_a", ("id_b", "id_b"): "id_b", ("id_a", "f"): "f", ("f", "id_b"): "f"}
    return CompositionTable(("a", "b"), arrows, compose, {"a": "id_a", "b": "id_b"}, name="walking-arrow")


def walking_iso_table() -> CompositionTable:
    arrows = (("id_a", "a", "a"), ("id_b", "b", "b"), ("f", "a", "b"), ("g", "b", "a"))
    compose = {
        ("id_a", "id_a"): "id_a",
        ("id_b", "id_b"): "id_b",
        ("id_a", "f"): "f",
        ("f", "id_b"): "f",
        ("id_b", "g"): "g",
        ("g", "id_a"): "g",
        ("f", "g"): "id_a",
        ("g", "f"): "id_b",
    }
    return CompositionTable(("a", "b"), arrows, compose, {"a": "id_a", "b": "id_b"}, name="walking-iso")


def parallel_pair_table() -> CompositionTable:
    arrows = (("id_a", "a", "a"), ("id_b", "b", "b"), ("f", "a", "b"), ("g", "a", "b"))
    compose = {
        ("id_a", "id_a"): "id_a",
        ("id_b", "id_b"): "id_b",
        ("id_a", "f"): "f",
        ("f", "id_b"): "f",
        ("id_a", "g"): "g",
        ("g", "id_b"): "g",
    }
    return CompositionTable(("a", "b"), arrows, compose, {"a": "id_a", "b": "id_b"}, name="parallel-pair")


def trivial_monoid_table() -> CompositionTable:
    return monoid_table(["e"], lambda x, y: "e", "e", "trivial-monoid")


# -- enumeration up to isomorphism ---------------------------------------


def _monoid_canonical(n: int, table: tuple) -> tuple:
    best = None
    for perm in permutations(range(1, n)):
        p = (0,) + perm  # p[old] = new
        inv = [0] * n
        for old, new in enumerate(p):
            inv[new] = old
        t = tuple(p[table[inv[i] * n + inv[j]]] for i in range(n) for j in range(n))
        if best is None or t < best:
            best = t
    return best


@lru_cache(maxsize=None)
def _monoids(n: int) -> tuple:
    """Multiplication tables (row-major, 0 the unit) of all monoids of order n, up to iso."""
    if n == 1:
        return ((0,),)
    cells = [(i, j) for i in range(1, n) for j in range(1, n)]
    table = [None] * (n * n)
    for i in range(n):
        table[i] = i
        table[i * n] = i
    found = set()

    def assoc_ok() -> bool:
        for a in range(n):
            for b in range(n):
                ab = table[a * n + b]
                if ab is None:
                    continue
                for c in range(n):
                    bc = table[b * n + c]
                    if bc is None:
                        continue
                    left = table[ab * n + c]
                    right = table[a * n + bc]
                    if left is not None and right is not None and left != right:
                        return False
        return True

    def go(k: int) -> None:
        if k == len(cells):
            found.add(_monoid_canonical(n, tuple(table)))
            return
        i, j = cells[k]
        for v in range(n):
            table[i * n + j] = v
            if assoc_ok():
                go(k + 1)
        table[i * n + j] = None

    go(0)
    return tuple(sorted(found))


def enumerate_monoid_tables(n: int) -> list[CompositionTable]:
    """All monoids of order ``n`` up to isomorphism, as one-object categories."""
    out = []
    names = ["e"] + [f"m{i}" for i in range(1, n)]
    for k, tab in enumerate(_monoids(n)):
        out.append(
            monoid_table(names, lambda x, y, tab=tab: names[tab[names.index(x) * n + names.index(y)]], "e", f"monoid-{n}-{k}")
        )
    return out


@lru_cache(maxsize=None)
def _posets(n: int) -> tuple:
    elems = list(range(n))
    pairs = [(i, j) for i in elems for j in elems if i != j]
    found = set()
    for bits in product((0, 1), repeat=len(pairs)):
        rel = {p for p, b in zip(pairs, bits) if b}
        if any((j, i) in rel for i, j in rel):
            continue
        if any((i, k) not in rel for i, j in rel for j2, k in rel if j == j2 and i != k):
            continue
        canon = min(tuple(sorted((p[i], p[j]) for i, j in rel)) for p in permutations(elems))
        found.add(canon)
    return tuple(sorted(found))


def enumerate_poset_tables(n: int) -> list[CompositionTable]:
    """All posets on ``n`` elements up to isomorphism, as categories."""
    objs = "abcdefgh"[:n]
    return [
        poset_table(objs, {(objs[i], objs[j]) for i, j in rel}, f"poset-{n}-{k}") for k, rel in enumerate(_posets(n))
    ]


def single_entry_mutations(t: CompositionTable) -> list[tuple[tuple, str, CompositionTable]]:
    """Every table obtained by changing one composite to another arrow of
    the same type."""
    out = []
    for (f, g), h in sorted(t.compose.items()):
        for h2 in t.hom(t.dom(f), t.cod(g)):
            if h2 != h:
                compose = dict(t.compose)
                compose[(f, g)] = h2
                out.append(((f, g), h2, CompositionTable(t.objects, t.arrows, compose, dict(t.identities), name=t.name)))
    return out


# -- dagger categories ------------------------------------------------------


def validate_dagger(t: CompositionTable, dag: Mapping) -> ValidationReport:
    report = ValidationReport()
    info = {a: (d, c) for a, d, c in t.arrows}
    for f, (d, c) in info.items():
        g = dag.get(f)
        if g is None or info.get(g) != (c, d):
            report.add("dagger-type", f"dagger of {f} must be an arrow {c} -> {d}")
    if not report.ok:
        return report
    for f in info:
        if dag[dag[f]] != f:
            report.add("dagger-involution", f"dagger is not involutive at {f}")
    for x, u in t.identities.items():
        if dag[u] != u:
            report.add("dagger-identity", f"dagger moves the identity of {x}")
    for (f, g), h in t.compose.items():
        if t.compose[(dag[g], dag[f])] != dag[h]:
            report.add("dagger-contravariance", f"(g∘f)† != f†∘g† at ({f}, {g})")
    return report


def dagger_from_involution(t: CompositionTable, dag: Mapping, name: str | None = None) -> Structure:
    """The structure over ``dagger`` for a category with a dagger.

    ``D(o=f, i=f†)`` is the graph of the dagger.
    """
    report = validate_table(t)
    report.issues.extend(validate_dagger(t, dag).issues if report.ok else [])
    if not report.ok:
        raise CatalogError(f"invalid dagger category:\n{report}")
    elements = category_elements(t)
    elements["D"] = {f"dag({a})": {"o": a, "i": dag[a]} for a, _, _ in t.arrows}
    M = _structure(_cat_sig("dagger"), elements, name or t.name or None)
    M.ensure_valid()
    return M


def oracle_unitaries(t: CompositionTable, dag: Mapping, a, b) -> list:
    """Isomorphisms ``f: a -> b`` whose inverse is ``f†``."""
    return [
        f
        for f in t.hom(a, b)
        if t.compose[(f, dag[f])] == t.identities[a] and t.compose[(dag[f], f)] == t.identities[b]
    ]


def group_inverse(t: CompositionTable) -> dict:
    """Inverse map of a groupoid table."""
    inv = {}
    for f, d, c in t.arrows:
        for g in t.hom(c, d):
            if t.compose[(f, g)] == t.identities[d] and t.compose[(g, f)] == t.identities[c]:
                inv[f] = g
    if len(inv) != len(t.arrows):
        raise CatalogError("table is not a groupoid")
    return inv


def iso_from_indiscernibility(t: CompositionTable, phi) -> str:
    """The isomorphism ``a -> b`` carried by an indiscernibility ``a ⋍ b`` at ``O``.

    On the fiber ``A(a, ★)`` the indiscernibility sends ``hom(a, a)`` to
    ``hom(a, b)``; the image of the identity of ``a`` is the extracted arrow.
    """
    from ..derivation import Joker

    a = phi.source
    for S, m in phi.maps.items():
        if getattr(S, "parent", None) == "A" and S.alpha[0] == a and isinstance(S.alpha[1], Joker):
            return m[t.identities[a]]
    raise CatalogError("indiscernibility has no component at A(a, ★)")

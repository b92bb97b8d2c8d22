from __future__ import annotations

from dataclasses import dataclass, field
from itertools import product
from typing import Callable, Sequence

from ..structure import Structure
from .tables import CatalogError, _structure


@dataclass
class MulticatTable:
    """A multicategory truncated at arity 2.

    ``arrows`` holds ``(name, inputs, output)`` with ``len(inputs) <= 2``.
    ``compose`` is keyed by ``(kind, args)`` where ``kind`` names the
    composition sort (``T01``, ``T11``, ``T002``, ``T112``, ``T21``) and
    ``args`` are the arrows being composed, in generator order.
    """

    objects: tuple
    arrows: tuple
    compose: dict
    identities: dict
    name: str = field(default="", compare=False)

    def info(self) -> dict:
        return {a: (tuple(ins), out) for a, ins, out in self.arrows}

    def of_profile(self, ins: Sequence, out) -> list:
        return [a for a, i, o in self.arrows if tuple(i) == tuple(ins) and o == out]

    def of_arity(self, n: int) -> list:
        return [a for a, i, _ in self.arrows if len(i) == n]


COMPOSITION_SHAPES = {
    # kind: (arities of the arrows composed, arity of the result)
    "T01": ((0, 1), 0),
    "T11": ((1, 1), 1),
    "T002": ((0, 0, 2), 0),
    "T112": ((1, 1, 2), 2),
    "T21": ((2, 1), 2),
}


def composable_tuples(t: MulticatTable) -> dict:
    """All tuples of arrows that each composition sort must compose."""
    info = t.info()
    out: dict = {k: [] for k in COMPOSITION_SHAPES}
    by_arity = {n: t.of_arity(n) for n in (0, 1, 2)}
    for f, g in product(by_arity[0], by_arity[1]):
        if info[f][1] == info[g][0][0]:
            out["T01"].append((f, g))
    for f, g in product(by_arity[1], by_arity[1]):
        if info[f][1] == info[g][0][0]:
            out["T11"].append((f, g))
    for f1, f2, g in product(by_arity[0], by_arity[0], by_arity[2]):
        if (info[f1][1], info[f2][1]) == info[g][0]:
            out["T002"].append((f1, f2, g))
    for f1, f2, g in product(by_arity[1], by_arity[1], by_arity[2]):
        if (info[f1][1], info[f2][1]) == info[g][0]:
            out["T112"].append((f1, f2, g))
    for f, g in product(by_arity[2], by_arity[1]):
        if info[f][1] == info[g][0][0]:
            out["T21"].append((f, g))
    return out


def _expected_profile(t: MulticatTable, kind: str, args: tuple) -> tuple:
    info = t.info()
    if kind == "T01":
        return (), info[args[1]][1]
    if kind == "T11":
        return info[args[0]][0], info[args[1]][1]
    if kind == "T002":
        return (), info[args[2]][1]
    if kind == "T112":
        return info[args[0]][0] + info[args[1]][0], info[args[2]][1]
    return info[args[0]][0], info[args[1]][1]


def validate_multicat(t: MulticatTable) -> list[str]:
    problems = []
    info = t.info()
    for kind, tuples in composable_tuples(t).items():
        for args in tuples:
            h = t.compose.get((kind, args))
            if h is None:
                problems.append(f"{kind}: no composite for {args}")
            elif info.get(h) != _expected_profile(t, kind, args):
                problems.append(f"{kind}: composite of {args} has the wrong profile")
    for x in t.objects:
        u = t.identities.get(x)
        if u is None or info.get(u) != ((x,), x):
            problems.append(f"object {x} lacks an identity")
    return problems


SLOTS = {
    "T01": ("f", "g", "h"),
    "T11": ("t0", "t1", "t2"),
    "T002": ("f1", "f2", "g", "h"),
    "T112": ("f1", "f2", "g", "h"),
    "T21": ("f", "g", "h"),
}


def multicategory_from_table(t: MulticatTable, name: str | None = None) -> Structure:
    from . import builtin_signature

    problems = validate_multicat(t)
    if problems:
        raise CatalogError("invalid multicategory:\n" + "\n".join(problems))
    info = t.info()
    elements: dict = {"O": list(t.objects), "A0": {}, "A1": {}, "A2": {}}
    for a, (ins, out) in info.items():
        if len(ins) == 0:
            elements["A0"][a] = {"c": out}
        elif len(ins) == 1:
            elements["A1"][a] = {"d": ins[0], "c": out}
        else:
            elements["A2"][a] = {"d1": ins[0], "d2": ins[1], "c": out}
    for kind in COMPOSITION_SHAPES:
        elements[kind] = {}
    for (kind, args), h in t.compose.items():
        slots = SLOTS[kind]
        elements[kind][f"{kind.lower()}({','.join(args)})"] = dict(zip(slots, args + (h,)))
    elements["I"] = {f"i({x})": {"i": u} for x, u in t.identities.items()}
    for n in (0, 1, 2):
        elements[f"E{n}"] = {f"e({a})": {"e1": a, "e2": a} for a in t.of_arity(n)}
    M = _structure(builtin_signature("multicat2"), elements, name or t.name or None)
    M.ensure_valid()
    return M


def oracle_multicat_isos(t: MulticatTable, a, b) -> list:
    """Unary arrows ``a -> b`` with a two-sided inverse."""
    out = []
    for f in t.of_profile((a,), b):
        for g in t.of_profile((b,), a):
            if t.compose[("T11", (f, g))] == t.identities[a] and t.compose[("T11", (g, f))] == t.identities[b]:
                out.append(f)
                break
    return out


def commutative_monoid_multicat(
    elements: Sequence[str], mult: Callable[[str, str], str], unit: str, name: str = ""
) -> MulticatTable:
    """One object; in every arity the arrows are the monoid elements and any
    composite is the product of everything involved."""
    arrows = []
    for n in (0, 1, 2):
        for e in elements:
            arrows.append((f"{e}_{n}", ("*",) * n, "*"))
    t = MulticatTable(("*",), tuple(arrows), {}, {"*": f"{unit}_1"}, name=name)
    value = {f"{e}_{n}": e for e in elements for n in (0, 1, 2)}
    for kind, tuples in composable_tuples(t).items():
        out_arity = COMPOSITION_SHAPES[kind][1]
        for args in tuples:
            acc = unit
            for a in args:
                acc = mult(acc, value[a])
            t.compose[(kind, args)] = f"{acc}_{out_arity}"
    return t


def codiscrete_multicat(objects: Sequence[str] = ("a", "b"), name: str = "") -> MulticatTable:
    """Exactly one arrow for every input profile and output."""

    def arrow(ins, out):
        return "".join(ins) + ">" + out

    arrows = []
    for n in (0, 1, 2):
        for ins in product(objects, repeat=n):
            for out in objects:
                arrows.append((arrow(ins, out), tuple(ins), out))
    t = MulticatTable(tuple(objects), tuple(arrows), {}, {x: arrow((x,), x) for x in objects}, name=name)
    for kind, tuples in composable_tuples(t).items():
        for args in tuples:
            ins, out = _expected_profile(t, kind, args)
            t.compose[(kind, args)] = arrow(ins, out)
    return t


def z2_multicat() -> MulticatTable:
    names = ["e", "g"]
    return commutative_monoid_multicat(names, lambda x, y: "e" if x == y else "g", "e", "multicat-z2")

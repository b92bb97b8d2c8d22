"""Builders for the shipped example structures.

The assets under ``assets/structures`` are the serialized output of these
functions; the test suite checks that the two stay identical.
"""

from __future__ import annotations

from typing import Callable

from ..structure import Structure
from .multicat import codiscrete_multicat, multicategory_from_table, z2_multicat
from .tables import (
    _cat_sig,
    _structure,
    category_from_table,
    cyclic_group_table,
    dagger_from_involution,
    discrete_table,
    group_inverse,
    linear_order_table,
    parallel_pair_table,
    trivial_monoid_table,
    walking_arrow_table,
    walking_iso_table,
    z2_table,
)


def relation_M() -> Structure:
    """Two points and the empty relation."""
    return _structure(_cat_sig("relation"), {"A": ["a", "b"], "R": {}}, "relation_M")


def relation_N() -> Structure:
    """Three points with the single edge a -> c."""
    return _structure(_cat_sig("relation"), {"A": ["a", "b", "c"], "R": {"r": {"s": "a", "t": "c"}}}, "relation_N")


def total_e() -> Structure:
    """Two parallel arrows f, g: x -> y made indistinguishable.

    E is total on the hom-fiber {f, g} and T is saturated under it, so f and g
    are indiscernible although they are different elements.
    """
    arrows = {"id_x": ("x", "x"), "id_y": ("y", "y"), "f": ("x", "y"), "g": ("x", "y")}
    T = {
        "t(id_x,id_x,id_x)": ("id_x", "id_x", "id_x"),
        "t(id_y,id_y,id_y)": ("id_y", "id_y", "id_y"),
    }
    for p in ("f", "g"):
        for q in ("f", "g"):
            T[f"t(id_x,{p},{q})"] = ("id_x", p, q)
            T[f"t({p},id_y,{q})"] = (p, "id_y", q)
    E = {"e(id_x,id_x)": ("id_x", "id_x"), "e(id_y,id_y)": ("id_y", "id_y")}
    for p in ("f", "g"):
        for q in ("f", "g"):
            E[f"e({p},{q})"] = (p, q)
    elements = {
        "O": ["x", "y"],
        "A": {a: {"d": d, "c": c} for a, (d, c) in arrows.items()},
        "T": {t: {"t0": a, "t1": b, "t2": c} for t, (a, b, c) in T.items()},
        "I": {"i(x)": {"i": "id_x"}, "i(y)": {"i": "id_y"}},
        "E": {e: {"e1": a, "e2": b} for e, (a, b) in E.items()},
    }
    M = _structure(_cat_sig(), elements, "total_E")
    M.ensure_valid()
    return M


def dagger_z4(inverse: bool = False) -> Structure:
    t = cyclic_group_table(4, name="Z4")
    dag = group_inverse(t) if inverse else {a: a for a, _, _ in t.arrows}
    return dagger_from_involution(t, dag, "dagger_Z4_inverse" if inverse else "dagger_Z4")


def _cat(table_fn, name: str) -> Callable[[], Structure]:
    return lambda: category_from_table(table_fn(), name)


EXAMPLES: dict[str, Callable[[], Structure]] = {
    "walking-arrow": _cat(walking_arrow_table, "walking_arrow"),
    "walking-iso": _cat(walking_iso_table, "walking_iso"),
    "linear-order-3": _cat(lambda: linear_order_table(3), "linear_order_3"),
    "discrete-3": _cat(lambda: discrete_table(3), "discrete_3"),
    "parallel-pair": _cat(parallel_pair_table, "parallel_pair"),
    "trivial-monoid": _cat(trivial_monoid_table, "trivial_monoid"),
    "z2": _cat(z2_table, "z2"),
    "z3": _cat(lambda: cyclic_group_table(3), "z3"),
    "total-E": total_e,
    "dagger-Z4": lambda: dagger_z4(False),
    "dagger-Z4-inverse": lambda: dagger_z4(True),
    "relation-M": relation_M,
    "relation-N": relation_N,
    "multicat-z2": lambda: multicategory_from_table(z2_multicat(), "multicat_z2"),
    "multicat-codiscrete": lambda: multicategory_from_table(codiscrete_multicat(), "multicat_codiscrete"),
}

"""Builtin signatures, theories and structures, plus table-level oracles.

Builtins are stored as DSL text under ``foldskit/assets`` and parsed on first
use.  A builtin is found by file stem (``cat+E``) or by the name declared in
the file (``cat_E``).
"""

from __future__ import annotations

import threading
from importlib import resources
from pathlib import Path

from ..logic import Theory
from ..signature import Signature
from ..structure import Structure
from .multicat import (
    MulticatTable,
    codiscrete_multicat,
    commutative_monoid_multicat,
    multicategory_from_table,
    oracle_multicat_isos,
    z2_multicat,
)
from .tables import (
    CatalogError,
    CompositionTable,
    category_from_table,
    cyclic_group_table,
    dagger_from_involution,
    discrete_table,
    enumerate_monoid_tables,
    enumerate_poset_tables,
    group_inverse,
    is_skeletal_with_trivial_automorphisms,
    linear_order_table,
    monoid_table,
    oracle_isos,
    oracle_unitaries,
    parallel_pair_table,
    poset_table,
    single_entry_mutations,
    table_from_category,
    trivial_monoid_table,
    validate_table,
    walking_arrow_table,
    walking_iso_table,
    z2_table,
)

_KINDS = {"signatures": ".fsig", "theories": ".fthy", "structures": ".fstr"}
_lock = threading.RLock()
_cache: dict = {}


def asset_dir() -> Path:
    return Path(str(resources.files("foldskit") / "assets"))


def asset_paths(kind: str) -> list[Path]:
    ext = _KINDS[kind]
    return sorted(p for p in (asset_dir() / kind).iterdir() if p.suffix == ext)


def _find(kind: str, name: str) -> Path:
    from ..dsl import header_names

    for p in asset_paths(kind):
        if p.stem == name:
            return p
    for p in asset_paths(kind):
        declared, _ = header_names(p.read_text(encoding="utf-8"))
        if declared == name:
            return p
    raise KeyError(name)


def _load(kind: str, name: str):
    from ..dsl import parse_signature, parse_structure, parse_theory

    with _lock:
        if (kind, name) in _cache:
            return _cache[(kind, name)]
        path = _find(kind, name)
        key = (kind, path.stem)
        if key in _cache:
            _cache[(kind, name)] = _cache[key]
            return _cache[key]
        text = path.read_text(encoding="utf-8")
        if kind == "signatures":
            value = parse_signature(text, file=path.name)
        elif kind == "theories":
            value = parse_theory(text, builtin_signature, file=path.name)
        else:
            value = parse_structure(text, builtin_signature, file=path.name)
        _cache[key] = _cache[(kind, name)] = value
        return value


def builtin_signature(name: str) -> Signature:
    return _load("signatures", name)


def builtin_theory(name: str) -> Theory:
    return _load("theories", name)


def builtin_structure(name: str) -> Structure:
    return _load("structures", name)


def builtin(name: str) -> Signature | Theory | Structure:
    """The named shipped asset (signature, theory or structure)."""
    for kind in _KINDS:
        try:
            return _load(kind, name)
        except KeyError:
            continue
    raise KeyError(f"no builtin named {name!r}")


def list_builtins() -> dict[str, list[str]]:
    return {kind: [p.stem for p in asset_paths(kind)] for kind in _KINDS}


def builtin_path(name: str) -> Path:
    for kind in _KINDS:
        try:
            return _find(kind, name)
        except KeyError:
            continue
    raise KeyError(f"no builtin named {name!r}")


__all__ = [
    "CatalogError",
    "CompositionTable",
    "MulticatTable",
    "asset_dir",
    "asset_paths",
    "builtin",
    "builtin_path",
    "builtin_signature",
    "builtin_structure",
    "builtin_theory",
    "category_from_table",
    "codiscrete_multicat",
    "commutative_monoid_multicat",
    "cyclic_group_table",
    "dagger_from_involution",
    "discrete_table",
    "enumerate_monoid_tables",
    "enumerate_poset_tables",
    "group_inverse",
    "is_skeletal_with_trivial_automorphisms",
    "linear_order_table",
    "list_builtins",
    "monoid_table",
    "multicategory_from_table",
    "oracle_isos",
    "oracle_multicat_isos",
    "oracle_unitaries",
    "parallel_pair_table",
    "poset_table",
    "single_entry_mutations",
    "table_from_category",
    "trivial_monoid_table",
    "validate_table",
    "walking_arrow_table",
    "walking_iso_table",
    "z2_multicat",
    "z2_table",
]

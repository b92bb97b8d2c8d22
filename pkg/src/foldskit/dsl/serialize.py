"""Canonical text for signatures, structures, theories and formulas."""

from __future__ import annotations

import re
from typing import Callable, Hashable, Mapping

from ..logic import And, Bot, Equal, Exists, Forall, Formula, Iff, Implies, Inhabited, Not, Or, Theory, Top, VarDecl
from ..signature import Signature
from ..structure import Structure
from .lexer import IDENT_RE, KEYWORDS


def element_text(e: Hashable) -> str:
    s = str(e)
    if s == "*":
        return s
    if re.fullmatch(r"[0-9]+", s):
        return s
    if IDENT_RE.match(s) and s not in KEYWORDS:
        return s
    escaped = s.replace("\\", "\\\\").replace('"', '\\"').replace("\n", "\\n").replace("\t", "\\t")
    return f'"{escaped}"'


def sanitize_names(ids) -> dict:
    """Map arbitrary sort ids to distinct DSL identifiers."""
    out: dict = {}
    taken: set = set()
    for sid in ids:
        raw = str(sid)
        base = re.sub(r"[^A-Za-z0-9_]+", "_", raw.replace("★", "J")).strip("_") or "S"
        if not re.match(r"[A-Za-z_]", base):
            base = "S_" + base
        if base in KEYWORDS:
            base += "_"
        name = base
        k = 2
        while name in taken:
            name = f"{base}_{k}"
            k += 1
        taken.add(name)
        out[sid] = name
    return out


def serialize_signature(sig: Signature, rename: Mapping | Callable | None = None) -> str:
    """Canonical ``.fsig`` text.  ``rename`` supplies names for sort ids that
    are not identifiers (derived sorts, for instance)."""
    if rename is None:
        if all(isinstance(s.id, str) and IDENT_RE.match(s.id) and s.id not in KEYWORDS for s in sig.sorts):
            rename = {s.id: s.id for s in sig.sorts}
        else:
            rename = sanitize_names(s.id for s in sig.sorts)
    nm = rename if callable(rename) else rename.__getitem__
    name = sig.name if IDENT_RE.match(sig.name) else sanitize_names([sig.name])[sig.name]
    lines = [f"signature {name} {{"]
    for s in sig.sorts:
        head = f"  sort {nm(s.id)} rank {s.rank}"
        if s.generators:
            gens = ", ".join(f"{g.label}: {nm(g.target)}" for g in s.generators)
            head += f" {{ {gens} }}"
        lines.append(head)
    owners: dict = {}
    for s in sig.sorts:
        for g in s.generators:
            owners.setdefault(g.label, []).append(s.id)
    for eq in sig.equations:
        prefix = ""
        if owners.get(eq.lhs[-1]) != [eq.source]:
            prefix = f"{nm(eq.source)}: "
        lines.append(f"  eq {prefix}{'.'.join(eq.lhs)} = {'.'.join(eq.rhs)}")
    lines.append("}")
    return "\n".join(lines) + "\n"


def serialize_structure(M: Structure) -> str:
    name = M.name if M.name and IDENT_RE.match(M.name) else "unnamed"
    lines = [f"structure {name} over {M.signature.name} {{"]
    for s in M.signature.sorts:
        elems = M.carriers[s.id]
        if not s.generators:
            inner = ", ".join(element_text(e) for e in elems)
            lines.append(f"  {s.id} = {{ {inner} }}" if elems else f"  {s.id} = {{ }}")
            continue
        if not elems:
            lines.append(f"  {s.id} = {{ }}")
            continue
        lines.append(f"  {s.id} = {{")
        for i, e in enumerate(elems):
            args = ", ".join(f"{g.label}={element_text(M.act(s.id, g.label, e))}" for g in s.generators)
            sep = "," if i < len(elems) - 1 else ""
            lines.append(f"    {element_text(e)} ({args}){sep}")
        lines.append("  }")
    lines.append("}")
    return "\n".join(lines) + "\n"


_PREC = {Iff: 1, Implies: 2, Or: 3, And: 4, Not: 5}
_OPS = {Iff: "<->", Implies: "->", Or: "\\/", And: "/\\"}


def _decl_text(d: VarDecl) -> str:
    if not d.args:
        return str(d.sort)
    return f"{d.sort}(" + ", ".join(f"{l}={v}" for l, v in d.args) + ")"


def serialize_formula(phi: Formula, prec: int = 0) -> str:
    """Text that parses back to ``phi``; quantifiers extend to the right and
    are parenthesized whenever they appear as an operand."""
    if isinstance(phi, Top):
        return "true"
    if isinstance(phi, Bot):
        return "false"
    if isinstance(phi, Inhabited):
        return f"{phi.sort}(" + ", ".join(f"{l}={v}" for l, v in phi.args) + ")"
    if isinstance(phi, Equal):
        return f"{phi.left} == {phi.right}"
    if isinstance(phi, (Forall, Exists)):
        word = "forall" if isinstance(phi, Forall) else "exists"
        kind = type(phi)
        names = [phi.var.name]
        body = phi.body
        while (
            isinstance(body, kind)
            and body.var.sort == phi.var.sort
            and body.var.args == phi.var.args
            and body.var.name not in names
            and all(v not in names + [body.var.name] for _, v in phi.var.args)
        ):
            names.append(body.var.name)
            body = body.body
        text = f"{word} {' '.join(names)} : {_decl_text(phi.var)}, {serialize_formula(body, 0)}"
        return f"({text})" if prec > 0 else text
    if isinstance(phi, Not):
        text = f"not {serialize_formula(phi.body, 6)}"
        return f"({text})" if prec > 5 else text
    kind = type(phi)
    p = _PREC[kind]
    if kind is And or kind is Or:
        left = serialize_formula(phi.left, p)
        right = serialize_formula(phi.right, p + 1)
    elif kind is Implies:
        left = serialize_formula(phi.left, p + 1)
        right = serialize_formula(phi.right, p)
    else:
        left = serialize_formula(phi.left, p + 1)
        right = serialize_formula(phi.right, p + 1)
    text = f"{left} {_OPS[kind]} {right}"
    return f"({text})" if prec > p else text


def serialize_theory(T: Theory) -> str:
    lines = [f"theory {T.name} over {T.signature.name} {{"]
    for name, phi in T.axioms:
        lines.append(f"  axiom {name}:")
        lines.append(f"    {serialize_formula(phi)}")
    lines.append("}")
    return "\n".join(lines) + "\n"


def serialize(asset) -> str:
    if isinstance(asset, Signature):
        return serialize_signature(asset)
    if isinstance(asset, Structure):
        return serialize_structure(asset)
    if isinstance(asset, Theory):
        return serialize_theory(asset)
    if isinstance(asset, Formula):
        return serialize_formula(asset)
    raise TypeError(f"cannot serialize {type(asset).__name__}")

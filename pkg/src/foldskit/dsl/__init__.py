"""Text formats: ``.fsig`` signatures, ``.fstr`` structures, ``.fthy`` theories."""

from .lexer import tokenize
from .parser import detect_kind, header_names, parse_formula, parse_signature, parse_structure, parse_theory
from .serialize import (
    element_text,
    sanitize_names,
    serialize,
    serialize_formula,
    serialize_signature,
    serialize_structure,
    serialize_theory,
)

__all__ = [
    "tokenize",
    "detect_kind",
    "header_names",
    "parse_formula",
    "parse_signature",
    "parse_structure",
    "parse_theory",
    "element_text",
    "sanitize_names",
    "serialize",
    "serialize_formula",
    "serialize_signature",
    "serialize_structure",
    "serialize_theory",
]

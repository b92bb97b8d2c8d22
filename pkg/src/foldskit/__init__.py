"""foldskit: finite FOLDS signatures, structures, indiscernibilities and univalence."""

from __future__ import annotations

from .derivation import (
    BottomFamily,
    DerivedSort,
    FamilyMap,
    Joker,
    SigMorphism,
    compose_morphisms,
    derive_signature,
    derive_structure,
    derived_morphism,
    identity_morphism,
    is_discrete_opfibration,
    partial_structure,
    pullback_structure,
)
from .errors import (
    BoundaryError,
    BoundaryMismatchError,
    BudgetExhausted,
    DerivationError,
    ElaborationError,
    FoldsError,
    MorphismError,
    ParseError,
    SignatureError,
    SourceSpan,
    StructureError,
    ValidationReport,
)
from .indiscernibility import (
    Indiscernibility,
    count_indiscernibilities,
    count_indiscernibilities_at,
    indiscernibilities,
    indiscernibilities_at,
    is_univalent,
    truncation_report,
    univalence_report,
)
from .logic import Theory, check_theory, countermodel, elaborate, evaluate
from .morphisms import (
    StructureMorphism,
    enumerate_morphisms,
    hsip_check,
    is_equivalence,
    is_equivalence_rel,
    is_iso,
    is_sse,
)
from .signature import Arrow, Signature, compose, fanout, height, hom_set, make_signature, validate_signature
from .structure import Boundary, Structure, boundary, fiber0, full_fiber, make_structure, validate_structure

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]

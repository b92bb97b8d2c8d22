"""Finite structures: set-valued functors on a signature.

A structure stores one finite carrier per sort and one function per generating
arrow.  Composite actions are computed on demand; path equations are checked by
:func:`validate_structure`.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass
from typing import Any, Hashable, Iterable, Mapping, Sequence

from .errors import BoundaryError, StructureError, UnknownElementError, ValidationReport
from .signature import Arrow, Signature, SortId

Element = Hashable


@dataclass(frozen=True)
class Boundary:
    """Images of one element along the fanouts of its sort at some ranks.

    ``entries`` pairs each fanout entry ``(L, f)`` with the element it is sent
    to, in canonical fanout order.
    """

    sort: SortId
    entries: tuple[tuple[tuple[SortId, Arrow], Element], ...]

    def values(self) -> tuple:
        return tuple(v for _, v in self.entries)

    def as_dict(self) -> dict[str, Element]:
        return {str(f): v for (_, f), v in self.entries}

    def __getitem__(self, key) -> Element:
        for (L, f), v in self.entries:
            if key == f or key == str(f) or key == (L, f):
                return v
        raise KeyError(key)

    def __str__(self) -> str:
        inner = ", ".join(f"{f}↦{v}" for (_, f), v in self.entries)
        return "{" + inner + "}"


class Structure:
    """A finite structure over ``signature``.

    ``carriers`` maps sort ids to iterables of element ids (missing sorts are
    empty).  ``actions`` maps a sort id to a mapping from generator label to a
    dict ``element -> element``.
    """

    def __init__(
        self,
        signature: Signature,
        carriers: Mapping[SortId, Iterable[Element]],
        actions: Mapping[SortId, Mapping[str, Mapping[Element, Element]]] | None = None,
        name: str | None = None,
    ):
        self.signature = signature
        self.name = name
        self._raw_carriers = {K: tuple(v) for K, v in carriers.items()}
        self.carriers: dict[SortId, tuple] = {s.id: self._raw_carriers.get(s.id, ()) for s in signature.sorts}
        self.actions: dict[SortId, dict[str, dict]] = {}
        actions = actions or {}
        for K, per in actions.items():
            self.actions[K] = {label: dict(fn) for label, fn in per.items()}
        for s in signature.sorts:
            self.actions.setdefault(s.id, {})
            for g in s.generators:
                self.actions[s.id].setdefault(g.label, {})
        self._lock = threading.RLock()
        self._members: dict = {}
        self._index: dict = {}
        self.cache: dict = {}  # scratch space for algorithms keyed by their own tags
        self._valid: ValidationReport | None = None

    def __repr__(self) -> str:
        sizes = ", ".join(f"{K}:{len(v)}" for K, v in self.carriers.items())
        return f"Structure({self.name or '?'} over {self.signature.name}; {sizes})"

    def __eq__(self, other) -> bool:
        if not isinstance(other, Structure):
            return NotImplemented
        if self.signature != other.signature:
            return False
        for s in self.signature.sorts:
            if frozenset(self.carriers[s.id]) != frozenset(other.carriers[s.id]):
                return False
            for g in s.generators:
                if self.actions[s.id][g.label] != other.actions[s.id][g.label]:
                    return False
        return True

    __hash__ = None  # type: ignore[assignment]

    # -- element access --------------------------------------------------
    def carrier(self, K: SortId) -> tuple:
        self.signature.sort(K)
        return self.carriers[K]

    def contains(self, K: SortId, e: Element) -> bool:
        members = self._members.get(K)
        if members is None:
            members = frozenset(self.carrier(K))
            self._members[K] = members
        try:
            return e in members
        except TypeError:
            return False

    def require(self, K: SortId, e: Element) -> None:
        if not self.contains(K, e):
            raise UnknownElementError(f"{e!r} is not an element of sort {K}")

    def act(self, K: SortId, label: str, e: Element) -> Element:
        try:
            return self.actions[K][label][e]
        except KeyError:
            self.signature.generator(K, label)
            raise UnknownElementError(f"action {K}.{label} undefined on {e!r}") from None

    def act_path(self, K: SortId, path: Sequence[str], e: Element) -> Element:
        cur_sort, cur = K, e
        for label in path:
            cur = self.act(cur_sort, label, cur)
            cur_sort = self.signature.generator(cur_sort, label).target
        return cur

    def act_arrow(self, f: Arrow, e: Element) -> Element:
        return self.act_path(f.source, f.path, e)

    def generator_images(self, K: SortId, e: Element) -> tuple:
        return tuple(self.act(K, g.label, e) for g in self.signature.sort(K).generators)

    # -- boundaries and fibers --------------------------------------------
    def _ranks_index(self, K: SortId, ranks: tuple[int, ...]):
        key = (K, ranks)
        idx = self._index.get(key)
        if idx is None:
            entries = []
            for m in ranks:
                entries.extend(self.signature.fanout(K, m))
            of: dict = {}
            over: dict = {}
            for e in self.carriers[K]:
                t = tuple(self.act_arrow(f, e) for _, f in entries)
                of[e] = t
                over.setdefault(t, []).append(e)
            idx = (tuple(entries), of, {t: tuple(v) for t, v in over.items()})
            with self._lock:
                self._index[key] = idx
        return idx

    def _generator_index(self, K: SortId):
        key = (K, "gens")
        idx = self._index.get(key)
        if idx is None:
            of: dict = {}
            over: dict = {}
            for e in self.carriers[K]:
                t = self.generator_images(K, e)
                of[e] = t
                over.setdefault(t, []).append(e)
            idx = (of, {t: tuple(v) for t, v in over.items()})
            with self._lock:
                self._index[key] = idx
        return idx

    def over_generators(self, K: SortId, images: tuple) -> tuple:
        """Elements of ``K`` whose generator images are exactly ``images``."""
        return self._generator_index(K)[1].get(tuple(images), ())

    def boundary_tuple(self, K: SortId, e: Element, m: int) -> tuple:
        self.require(K, e)
        return self._ranks_index(K, (m,))[1][e]

    def full_boundary_tuple(self, K: SortId, e: Element) -> tuple:
        self.require(K, e)
        return self._ranks_index(K, tuple(range(self.signature.rank(K))))[1][e]

    def boundary(self, K: SortId, e: Element, m: int) -> Boundary:
        entries = self.signature.fanout(K, m)
        return Boundary(K, tuple(zip(entries, self.boundary_tuple(K, e, m))))

    def full_boundary(self, K: SortId, e: Element) -> Boundary:
        entries = self.signature.full_fanout(K)
        return Boundary(K, tuple(zip(entries, self.full_boundary_tuple(K, e))))

    def fiber0(self, K: SortId, beta: Any) -> tuple:
        """Elements of ``K`` whose rank-0 boundary is ``beta``."""
        entries = self.signature.fanout(K, 0) if self.signature.rank(K) > 0 else []
        t = _coerce_boundary(K, entries, beta)
        if self.signature.rank(K) == 0:
            return self.carriers[K]
        return self._ranks_index(K, (0,))[2].get(t, ())

    def fiber0_partition(self, K: SortId) -> dict[tuple, tuple]:
        return dict(self._ranks_index(K, (0,))[2])

    def full_fiber(self, K: SortId, beta: Any) -> tuple:
        """Elements of ``K`` over a boundary covering every rank below ``K``.

        The boundary must name elements of the right sorts and be compatible
        with the structure's actions; otherwise :class:`BoundaryError`.
        """
        entries = self.signature.full_fanout(K)
        t = _coerce_boundary(K, entries, beta)
        position = {f: i for i, (_, f) in enumerate(entries)}
        for (L, f), x in zip(entries, t):
            if not self.contains(L, x):
                raise BoundaryError(f"boundary value {x!r} at {f} is not an element of {L}")
            if self.signature.rank(L) == 0:
                continue
            for L2, g in self.signature.full_fanout(L):
                fg = self.signature.compose(f, g)
                if t[position[fg]] != self.act_arrow(g, x):
                    raise BoundaryError(
                        f"boundary of sort {K} is incompatible: {fg} is {t[position[fg]]!r} "
                        f"but {g} of {x!r} is {self.act_arrow(g, x)!r}"
                    )
        return self._ranks_index(K, tuple(range(self.signature.rank(K))))[2].get(t, ())

    # -- validation ------------------------------------------------------
    def validate(self) -> ValidationReport:
        with self._lock:
            if self._valid is None:
                self._valid = validate_structure(self.signature, self)
            return self._valid

    def ensure_valid(self) -> None:
        report = self.validate()
        if not report.ok:
            raise StructureError(f"invalid structure {self.name or ''}:\n{report}")


def _coerce_boundary(K: SortId, entries, beta) -> tuple:
    if isinstance(beta, Boundary):
        if tuple(e for e, _ in beta.entries) != tuple(entries):
            raise BoundaryError(f"boundary does not match the fanout of {K}")
        return beta.values()
    if isinstance(beta, Mapping):
        out = []
        for L, f in entries:
            for key in (f, str(f), (L, f)):
                if key in beta:
                    out.append(beta[key])
                    break
            else:
                raise BoundaryError(f"boundary for {K} is missing a value at {f}")
        if len(beta) != len(entries):
            raise BoundaryError(f"boundary for {K} has extra entries")
        return tuple(out)
    t = tuple(beta)
    if len(t) != len(entries):
        raise BoundaryError(f"boundary for {K} needs {len(entries)} values, got {len(t)}")
    return t


def _juxtaposed(labels: Sequence[str]) -> str:
    return "".join(labels)


def validate_structure(sig: Signature, M: Structure) -> ValidationReport:
    """Report every way in which ``M`` fails to be a functor on ``sig``."""
    report = ValidationReport()
    if M.signature != sig:
        report.add("signature-mismatch", f"structure is over {M.signature.name}, not {sig.name}")
        return report
    for K in M._raw_carriers:
        if not sig.has_sort(K):
            report.add("unknown-sort", f"carrier given for undeclared sort {K}", K)
    for K in M.actions:
        if not sig.has_sort(K):
            report.add("unknown-sort", f"actions given for undeclared sort {K}", K)
    for s in sig.sorts:
        elems = M.carriers[s.id]
        if len(set(elems)) != len(elems):
            report.add("duplicate-element", f"sort {s.id} lists an element twice", s.id)
        labels = {g.label for g in s.generators}
        for extra in set(M.actions.get(s.id, {})) - labels:
            report.add("unknown-generator", f"action for undeclared generator {s.id}.{extra}", s.id)
        for g in s.generators:
            fn = M.actions[s.id][g.label]
            target = set(M.carriers[g.target])
            for e in elems:
                if e not in fn:
                    report.add("partial-action", f"{s.id}.{g.label} is undefined on {e!r}", (s.id, e))
                elif fn[e] not in target:
                    report.add(
                        "dangling-image",
                        f"{s.id}.{g.label} sends {e!r} to {fn[e]!r}, which is not in {g.target}",
                        (s.id, e),
                    )
            for e in set(fn) - set(elems):
                report.add("extra-action", f"{s.id}.{g.label} defined on non-element {e!r}", (s.id, e))
    if not report.ok:
        return report
    for eq in sig.equations:
        lhs = tuple(reversed(eq.lhs))
        rhs = tuple(reversed(eq.rhs))
        for e in M.carriers[eq.source]:
            left = M.act_path(eq.source, lhs, e)
            right = M.act_path(eq.source, rhs, e)
            if left != right:
                report.add(
                    "equation-violated",
                    f"{_juxtaposed(eq.lhs)} = {_juxtaposed(eq.rhs)} fails at {eq.source} element {e!r}: "
                    f"{'.'.join(eq.lhs)} gives {left!r}, {'.'.join(eq.rhs)} gives {right!r}",
                    (eq.source, e),
                )
    return report


def boundary(M: Structure, K: SortId, e: Element, m: int) -> Boundary:
    return M.boundary(K, e, m)


def fiber0(M: Structure, K: SortId, beta: Any) -> tuple:
    return M.fiber0(K, beta)


def full_fiber(M: Structure, K: SortId, beta: Any) -> tuple:
    return M.full_fiber(K, beta)


def make_structure(
    sig: Signature,
    elements: Mapping[SortId, Any],
    name: str | None = None,
) -> Structure:
    """Build a structure from a compact description and validate it.

    ``elements[K]`` is either an iterable of ids (for sorts without
    generators) or a mapping ``id -> {label: image}``.
    """
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
    M = Structure(sig, carriers, actions, name=name)
    M.ensure_valid()
    return M

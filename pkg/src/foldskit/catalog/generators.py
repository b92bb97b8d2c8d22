"""Seeded random generators for property tests and the ``--seed`` flag."""

from __future__ import annotations

import itertools
import random
from typing import Mapping

from ..derivation import BottomFamily, FamilyMap, SigMorphism, is_discrete_opfibration
from ..morphisms import StructureMorphism
from ..signature import Arrow, Generator, PathEquation, Signature, SortDecl
from ..structure import Structure


def random_signature(
    rng: random.Random,
    *,
    max_height: int = 3,
    max_sorts: int = 5,
    max_generators: int = 3,
    equation_rate: float = 0.5,
    name: str = "R",
) -> Signature:
    """A valid signature of height between 1 and ``max_height``.

    Every sort of rank ``r > 0`` has a generator into some sort of rank
    ``r - 1``.  Equations identify two composable paths with equal endpoints.
    """
    height = rng.randint(1, max_height)
    n = rng.randint(height, max(height, max_sorts))
    ranks = list(range(height)) + [rng.randrange(height) for _ in range(n - height)]
    ranks.sort()
    ids = [f"S{i}" for i in range(n)]
    rank_of = dict(zip(ids, ranks))
    decls = []
    for K in ids:
        r = rank_of[K]
        gens = []
        if r > 0:
            below = [L for L in ids if rank_of[L] < r]
            just_below = [L for L in ids if rank_of[L] == r - 1]
            count = rng.randint(1, max_generators)
            targets = [rng.choice(just_below)] + [rng.choice(below) for _ in range(count - 1)]
            gens = [Generator(f"g{j}", T) for j, T in enumerate(targets)]
        decls.append(SortDecl(K, r, tuple(gens)))
    sig = Signature(name, decls, [])
    equations = []
    for s in decls:
        if s.rank < 2 or rng.random() >= equation_rate:
            continue
        by_target: dict = {}
        for f in _paths(sig, s.id, 2):
            by_target.setdefault(f[1], []).append(f[0])
        pairs = [
            (p, q) for paths in by_target.values() for p, q in itertools.combinations(paths, 2) if p[0] != q[0]
        ]
        if pairs:
            p, q = rng.choice(pairs)
            equations.append(PathEquation(s.id, tuple(reversed(p)), tuple(reversed(q))))
    return Signature(name, decls, equations)


def _paths(sig: Signature, K, max_len: int) -> list[tuple[tuple, object]]:
    """Generator paths out of ``K`` of length 1..max_len, in application order."""
    out = []
    frontier = [((), K)]
    for _ in range(max_len):
        nxt = []
        for path, cur in frontier:
            for g in sig.sort(cur).generators:
                item = (path + (g.label,), g.target)
                out.append(item)
                nxt.append(item)
        frontier = nxt
    return out


def random_family(rng: random.Random, sig: Signature, *, max_size: int = 3, prefix: str = "x") -> BottomFamily:
    return BottomFamily(
        {K: tuple(f"{prefix}{i}" for i in range(rng.randint(0, max_size))) for K in sig.bottom_sorts()}
    )


def random_family_map(
    rng: random.Random, source: BottomFamily, target: BottomFamily, sort_map: Mapping | None = None
) -> FamilyMap | None:
    """A random sortwise function, or ``None`` if some sort has no targets."""
    maps = {}
    for K in source:
        TK = sort_map[K] if sort_map is not None else K
        pool = target[TK]
        if source[K] and not pool:
            return None
        maps[K] = {x: rng.choice(pool) for x in source[K]}
    return FamilyMap(source, target, maps)


def renaming(sig: Signature, suffix: str = "'") -> tuple[Signature, SigMorphism]:
    """A copy of ``sig`` with renamed sorts and the isomorphism onto it."""
    rename = {s.id: f"{s.id}{suffix}" for s in sig.sorts}
    decls = [SortDecl(rename[s.id], s.rank, tuple(Generator(g.label, rename[g.target]) for g in s.generators)) for s in sig.sorts]
    eqs = [PathEquation(rename[e.source], e.lhs, e.rhs) for e in sig.equations]
    copy = Signature(sig.name + suffix, decls, eqs)
    gen_map = {
        (s.id, g.label): copy.arrow(rename[s.id], (g.label,)) for s in sig.sorts for g in s.generators
    }
    return copy, SigMorphism(sig, copy, rename, gen_map)


def disjoint_union(sig: Signature) -> tuple[Signature, SigMorphism]:
    """``sig + sig`` together with the fold map back onto ``sig``."""
    decls = []
    eqs = []
    for tag in ("L", "R"):
        for s in sig.sorts:
            decls.append(
                SortDecl(f"{tag}{s.id}", s.rank, tuple(Generator(g.label, f"{tag}{g.target}") for g in s.generators))
            )
        eqs.extend(PathEquation(f"{tag}{e.source}", e.lhs, e.rhs) for e in sig.equations)
    double = Signature(sig.name + "+" + sig.name, decls, eqs)
    sort_map = {f"{tag}{s.id}": s.id for tag in ("L", "R") for s in sig.sorts}
    gen_map = {
        (f"{tag}{s.id}", g.label): sig.arrow(s.id, (g.label,))
        for tag in ("L", "R")
        for s in sig.sorts
        for g in s.generators
    }
    fold = SigMorphism(double, sig, sort_map, gen_map)
    assert is_discrete_opfibration(fold)
    return double, fold


def consistent_images(M: Structure, K) -> list[tuple]:
    """Generator-image tuples at ``K`` that respect every path equation."""
    sig = M.signature
    gens = sig.sort(K).generators
    pools = [M.carriers[g.target] for g in gens]
    eqs = [e for e in sig.equations if e.source == K]
    out = []
    for images in itertools.product(*pools):
        env = {g.label: x for g, x in zip(gens, images)}
        ok = True
        for e in eqs:
            sides = []
            for side in (e.lhs, e.rhs):
                first = side[-1]
                T = sig.generator(K, first).target
                rest = tuple(reversed(side[:-1]))
                sides.append(M.act_path(T, rest, env[first]) if rest else env[first])
            if sides[0] != sides[1]:
                ok = False
                break
        if ok:
            out.append(images)
    return out


def random_structure(rng: random.Random, sig: Signature, *, max_size: int = 3, name: str = "random") -> Structure:
    """A random valid structure, built one rank at a time."""
    carriers: dict = {s.id: [] for s in sig.sorts}
    actions: dict = {s.id: {g.label: {} for g in s.generators} for s in sig.sorts}
    M = Structure(sig, carriers, actions, name=name)
    for r in range(sig.height):
        for K in sig.sorts_of_rank(r):
            s = sig.sort(K)
            if not s.generators:
                elems = [f"{K}_{i}" for i in range(rng.randint(0, max_size))]
                per: dict = {}
            else:
                options = consistent_images(M, K)
                chosen = [rng.choice(options) for _ in range(rng.randint(0, max_size))] if options else []
                elems = [f"{K}_{i}" for i in range(len(chosen))]
                per = {g.label: {e: imgs[j] for e, imgs in zip(elems, chosen)} for j, g in enumerate(s.generators)}
            carriers[K] = elems
            actions[K] = per
            M = Structure(sig, carriers, actions, name=name)
    M.ensure_valid()
    return M


def pullback_cover(N: Structure, bottom: Mapping) -> tuple[Structure, StructureMorphism]:
    """A structure ``M`` with a morphism ``f: M -> N`` whose derived structure
    is exactly the pullback of ``N``'s derived structure along ``f``.

    ``bottom[K]`` maps a set of new rank-0 elements into ``N(K)``.  Above rank
    0 the elements of ``M`` are pairs ``(y, alpha)`` of an element of ``N``
    and a choice of preimages for its rank-0 boundary.
    """
    sig = N.signature
    carriers: dict = {}
    actions: dict = {}
    fmaps: dict = {}
    for K in sig.bottom_sorts():
        carriers[K] = list(bottom[K])
        actions[K] = {}
        fmaps[K] = dict(bottom[K])
    fibers = {K: {} for K in sig.bottom_sorts()}
    for K in sig.bottom_sorts():
        for x, y in bottom[K].items():
            fibers[K].setdefault(y, []).append(x)
    for s in sorted(sig.sorts, key=lambda s: s.rank):
        if s.rank == 0:
            continue
        K = s.id
        entries = sig.fanout(K, 0)
        elems = []
        for y in N.carriers[K]:
            beta = N.boundary_tuple(K, y, 0)
            pools = [fibers[L].get(b, []) for (L, _), b in zip(entries, beta)]
            for alpha in itertools.product(*pools):
                elems.append((y, alpha))
        carriers[K] = elems
        per: dict = {}
        for g in s.generators:
            T = g.target
            garrow = Arrow(K, T, (g.label,))
            if sig.rank(T) == 0:
                idx = [i for i, (_, f) in enumerate(entries) if f == sig.arrow(K, garrow.path)][0]
                per[g.label] = {e: e[1][idx] for e in elems}
            else:
                pos = {f: i for i, (_, f) in enumerate(entries)}
                reidx = [pos[sig.compose(garrow, h)] for _, h in sig.fanout(T, 0)]
                per[g.label] = {e: (N.act(K, g.label, e[0]), tuple(e[1][i] for i in reidx)) for e in elems}
        actions[K] = per
        fmaps[K] = {e: e[0] for e in elems}
    M = Structure(sig, carriers, actions, name=f"cover of {N.name}")
    M.ensure_valid()
    return M, StructureMorphism(M, N, fmaps)

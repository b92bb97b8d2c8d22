"""One test per acceptance criterion.  Each prints a ``criterion N: PASS|FAIL``
line; the lines are repeated in the terminal summary.

Every quantity is exact.  Wall-clock budgets are the per-criterion limits.
Two criteria state claims that do not hold for the structures they name; their
literal forms are strict ``xfail`` tests that print FAIL, next to green tests
for the parts that do hold.
"""

from __future__ import annotations

import random
import time

import pytest

from foldskit.catalog import (
    asset_paths,
    builtin_signature,
    builtin_structure,
    builtin_theory,
    category_from_table,
    cyclic_group_table,
    dagger_from_involution,
    enumerate_monoid_tables,
    enumerate_poset_tables,
    group_inverse,
    is_skeletal_with_trivial_automorphisms,
    oracle_isos,
    oracle_unitaries,
    parallel_pair_table,
    single_entry_mutations,
    validate_table,
    walking_arrow_table,
    walking_iso_table,
)
from foldskit.catalog.generators import (
    disjoint_union,
    pullback_cover,
    random_family,
    random_family_map,
    random_signature,
    random_structure,
    renaming,
)
from foldskit.catalog.tables import iso_from_indiscernibility
from foldskit.derivation import (
    DerivedSort,
    FamilyMap,
    SigMorphism,
    compose_morphisms,
    derive_signature,
    derive_structure,
    derived_morphism,
    identity_family_map,
    identity_morphism,
    is_discrete_opfibration,
    pullback_structure,
)
from foldskit.dsl import parse_signature, parse_structure, parse_theory, serialize, serialize_signature
from foldskit.errors import FoldsError, ParseError
from foldskit.indiscernibility import (
    count_indiscernibilities,
    count_indiscernibilities_at,
    indiscernibilities,
    is_univalent,
    is_univalent_at,
    top_fiber_sizes,
    univalence_report,
)
from foldskit.logic import check_theory, invariance_check
from foldskit.morphisms import (
    StructureMorphism,
    _bottom_family_map,
    enumerate_morphisms,
    hsip_check,
    is_iso,
    validate_morphism,
)
from foldskit.signature import make_signature
from foldskit.structure import Structure


def catalog_tables():
    ts = [t for n in (1, 2, 3, 4) for t in enumerate_monoid_tables(n)]
    ts += [t for n in (1, 2, 3, 4) for t in enumerate_poset_tables(n)]
    ts += [walking_arrow_table(), walking_iso_table(), parallel_pair_table()]
    return ts


class Clock:
    def __init__(self):
        self.start = time.perf_counter()

    @property
    def seconds(self) -> float:
        return time.perf_counter() - self.start


# -- 1 ------------------------------------------------------------------------


def _signature_counts():
    sig = builtin_signature("cat_E")
    return {
        "hom(T,O)": len(sig.hom_set("T", "O")),
        "hom(I,O)": len(sig.hom_set("I", "O")),
        "hom(E,O)": len(sig.hom_set("E", "O")),
        "fanout(A,0)": len(sig.fanout("A", 0)),
        "height": sig.height,
    }


def test_criterion_01_attainable_parts():
    clock = Clock()
    counts = _signature_counts()
    assert counts["hom(T,O)"] == 3
    assert counts["hom(I,O)"] == 1
    assert counts["fanout(A,0)"] == 2
    assert counts["height"] == 3
    # the two equations on E leave d.e1 and c.e1 as distinct classes
    assert counts["hom(E,O)"] == 2
    assert clock.seconds < 1


@pytest.mark.xfail(strict=True, reason="|hom(E,O)| is 2 under de1=de2, ce1=ce2; 1 would force d.e1=c.e1")
def test_criterion_01_literal(verdict):
    counts = _signature_counts()
    expected = {"hom(T,O)": 3, "hom(I,O)": 1, "hom(E,O)": 1, "fanout(A,0)": 2, "height": 3}
    ok = counts == expected
    verdict(1, ok, f"cat+E counts {counts}; expected {expected}")
    assert ok


# -- 2 ------------------------------------------------------------------------


def test_criterion_02(verdict):
    clock = Clock()
    rg = builtin_signature("rg")
    D = derive_signature(rg, {"O": ("a", "b")})
    rank0 = sorted(str(S) for S in D.sorts_of_rank(0))
    rank1 = [D.sort(S) for S in D.sorts_of_rank(1)]
    arrows = sorted((str(s.id), g.label, str(g.target)) for s in rank1 for g in s.generators)
    one = make_signature("points", [("P", 0, []), ("Q", 0, [])])
    empty = derive_signature(one, {"P": ("p", "q"), "Q": ("r",)})
    relation = derive_signature(builtin_signature("relation"), {"A": ("a", "b")})
    ok = (
        rank0 == ["A(a,a)", "A(a,b)", "A(b,a)", "A(b,b)"]
        and arrows == [("I(a)", "i", "A(a,a)"), ("I(b)", "i", "A(b,b)")]
        and empty.sorts == ()
        and relation.height == 1
        and D.height == rg.height - 1 == 2
        and clock.seconds < 1
    )
    verdict(2, ok, f"rank 0 {rank0}; rank 1 arrows {arrows}; height-1 derivative empty")
    assert ok


# -- 3 ------------------------------------------------------------------------


def test_criterion_03(verdict):
    clock = Clock()
    tables = catalog_tables()
    pairs = mismatches = 0
    for t in tables:
        M = category_from_table(t)
        for a in t.objects:
            for b in t.objects:
                pairs += 1
                found = indiscernibilities(M, "O", a, b)
                expected = oracle_isos(t, a, b)
                extracted = [iso_from_indiscernibility(t, phi) for phi in found]
                bijective = len(set(extracted)) == len(extracted) and sorted(extracted) == sorted(expected)
                if len(found) != len(expected) or not bijective:
                    mismatches += 1
    ok = len(tables) >= 10 and mismatches == 0 and clock.seconds < 60
    verdict(3, ok, f"{len(tables)} categories, {pairs} object pairs, {mismatches} mismatches, {clock.seconds:.1f}s")
    assert ok


# -- 4 ------------------------------------------------------------------------


def test_criterion_04(verdict):
    clock = Clock()
    checked = bad = 0
    for t in catalog_tables():
        M = category_from_table(t)
        for f, d, c in t.arrows:
            for g in t.hom(d, c):
                checked += 1
                if (count_indiscernibilities_at(M, "A", f, g, limit=1) > 0) != (f == g):
                    bad += 1
    E = builtin_structure("total-E")
    total_fg = count_indiscernibilities_at(E, "A", "f", "g")
    _, Ep = derive_structure(E)
    univalent_at_A = is_univalent_at(Ep, DerivedSort("A", ("x", "y")))
    ok = bad == 0 and total_fg > 0 and not univalent_at_A and clock.seconds < 10
    verdict(
        4,
        ok,
        f"{checked} parallel arrow pairs, {bad} disagreements; total-E |f ⋍ g| = {total_fg}, "
        f"univalent at A(x,y): {univalent_at_A}; {clock.seconds:.1f}s",
    )
    assert ok


# -- 5 ------------------------------------------------------------------------


def test_criterion_05(verdict):
    clock = Clock()
    wrong = []
    skeletal = 0
    for t in catalog_tables():
        if is_skeletal_with_trivial_automorphisms(t):
            skeletal += 1
            if not is_univalent(category_from_table(t)):
                wrong.append(t.name)
    for name in ("discrete-3", "linear-order-3"):
        if not is_univalent(builtin_structure(name)):
            wrong.append(name)
    iso = univalence_report(builtin_structure("walking-iso")).first_failure
    z2 = univalence_report(builtin_structure("z2")).first_failure
    ok = (
        not wrong
        and iso is not None
        and (iso.sort, iso.a, iso.b) == ("O", "a", "b")
        and z2 is not None
        and (z2.sort, z2.a, z2.b, z2.count) == ("O", "*", "*", 2)
        and clock.seconds < 10
    )
    verdict(
        5,
        ok,
        f"{skeletal} skeletal catalog categories univalent; walking-iso fails at {iso.sort} {iso.a},{iso.b}; "
        f"Z/2 fails at {z2.sort} {z2.a},{z2.b} with {z2.count} self-indiscernibilities",
    )
    assert ok


# -- 6 ------------------------------------------------------------------------


def test_criterion_06(verdict):
    clock = Clock()
    t = cyclic_group_table(4)
    rows = []
    for kind, dag in (("identity", {a: a for a, _, _ in t.arrows}), ("inverse", group_inverse(t))):
        M = dagger_from_involution(t, dag)
        rows.append(
            (kind, count_indiscernibilities(M, "O", "*", "*"), len(oracle_isos(t, "*", "*")), len(oracle_unitaries(t, dag, "*", "*")))
        )
    ok = rows == [("identity", 2, 4, 2), ("inverse", 4, 4, 4)] and clock.seconds < 10
    verdict(6, ok, "Z/4 (dagger, indiscernibilities, isos, unitaries): " + "; ".join(map(str, rows)))
    assert ok


# -- 7 ------------------------------------------------------------------------


def _summand(sig, double, tag):
    sort_map = {s.id: f"{tag}{s.id}" for s in sig.sorts}
    gen_map = {(s.id, g.label): double.arrow(f"{tag}{s.id}", (g.label,)) for s in sig.sorts for g in s.generators}
    return SigMorphism(sig, double, sort_map, gen_map)


def test_criterion_07(verdict):
    clock = Clock()
    rng = random.Random(7)
    identity_ok = composition_ok = opfib_ok = 0
    compositions = 0
    for i in range(100):
        sig = random_signature(rng, max_height=3, max_sorts=5, name=f"R{i}")
        fam = random_family(rng, sig, max_size=3)
        if derived_morphism(identity_morphism(sig), identity_family_map(fam)) == identity_morphism(derive_signature(sig, fam)):
            identity_ok += 1
        double, fold = disjoint_union(sig)
        copy, R = renaming(sig)
        H = _summand(sig, double, rng.choice("LR"))
        for _ in range(20):
            fam1 = random_family(rng, sig, max_size=3, prefix="x")
            fam2 = random_family(rng, double, max_size=3, prefix="y")
            fam3 = random_family(rng, copy, max_size=3, prefix="z")
            h = random_family_map(rng, fam1, fam2, H.sort_map)
            G = compose_morphisms(R, fold)
            k = random_family_map(rng, fam2, fam3, G.sort_map)
            if h is not None and k is not None:
                break
        else:
            continue
        compositions += 1
        kh = FamilyMap(fam1, fam3, {K: {x: k(H.sort_map[K], h(K, x)) for x in fam1[K]} for K in fam1})
        lhs = derived_morphism(compose_morphisms(G, H), kh)
        rhs = compose_morphisms(derived_morphism(G, k), derived_morphism(H, h))
        composition_ok += lhs == rhs
        opfib_ok += all(is_discrete_opfibration(D) for D in (lhs, derived_morphism(H, h), derived_morphism(G, k)))
    ok = identity_ok == 100 and compositions >= 90 and composition_ok == opfib_ok == compositions and clock.seconds < 60
    verdict(
        7,
        ok,
        f"identity law {identity_ok}/100; composition law {composition_ok}/{compositions}; "
        f"opfibrations {opfib_ok}/{compositions}; {clock.seconds:.1f}s",
    )
    assert ok


# -- 8 ------------------------------------------------------------------------


def _univalent_catalog():
    out = []
    for M in [category_from_table(t) for t in catalog_tables()] + [builtin_structure(p.stem) for p in asset_paths("structures")]:
        if is_univalent(M) and not any(M == N for N in out):
            out.append(M)
    return out


def test_criterion_08(verdict):
    clock = Clock()
    univalent = _univalent_catalog()
    small = [M for M in univalent if max(map(len, M.carriers.values())) <= 4]
    # every ordered pair of small structures, then every univalent structure with itself
    pairs = [(M, N) for M in small for N in small if M.signature == N.signature]
    pairs += [(M, M) for M in univalent if M not in small]
    totals = {"pairs": 0, "morphisms": 0, "sse": 0, "isos": 0, "equivalences": 0}
    counterexamples = []
    for M, N in pairs:
        r = hsip_check(M, N)
        assert r.applicable
        totals["pairs"] += 1
        totals["morphisms"] += r.morphisms
        totals["sse"] += r.sse
        totals["isos"] += r.isos
        totals["equivalences"] += r.equivalences
        counterexamples += [(M.name, N.name, c) for c in r.counterexamples]
    ok = (
        not counterexamples
        and totals["sse"] == totals["isos"] == totals["equivalences"] > 0
        and clock.seconds < 60
    )
    verdict(
        8,
        ok,
        f"{len(small)} univalent structures with carriers <= 4 (all pairs) and {len(univalent)} univalent "
        f"structures (self pairs): {totals}; {len(counterexamples)} counterexamples; {clock.seconds:.1f}s",
    )
    assert ok


# -- 9 ------------------------------------------------------------------------


def _comparison(M, N, f):
    fam_M, Mp = derive_structure(M)
    fam_N, Np = derive_structure(N)
    H = derived_morphism(identity_morphism(M.signature), _bottom_family_map(f, fam_M, fam_N))
    P = pullback_structure(H, Np)
    maps = {S: {x: f.maps[S.parent][x] for x in Mp.carriers[S]} for S in Mp.signature.sort_ids()}
    return StructureMorphism(Mp, P, maps)


def test_criterion_09(verdict):
    clock = Clock()
    rng = random.Random(9)
    bases = [builtin_structure(n) for n in ("walking-iso", "walking-arrow", "z2", "relation-M", "relation-N", "parallel-pair")]
    made = exact = implications = violations = 0
    while made < 50:
        if made < len(bases) * 3:
            N = bases[made % len(bases)]
        else:
            sig = random_signature(rng, max_sorts=4, max_generators=2)
            N = random_structure(rng, sig, max_size=2)
        bottom = {}
        for K in N.signature.bottom_sorts():
            pool = N.carriers[K]
            bottom[K] = {f"{K}~{j}": rng.choice(pool) for j in range(rng.randint(0, 3))} if pool else {}
        try:
            M, f = pullback_cover(N, bottom)
        except FoldsError:
            continue
        made += 1
        c = _comparison(M, N, f)
        exact += validate_morphism(c).ok and is_iso(c)
        for K in M.signature.bottom_sorts():
            for x in M.carriers[K]:
                for y in M.carriers[K]:
                    if count_indiscernibilities(N, K, f.maps[K][x], f.maps[K][y], limit=1):
                        implications += 1
                        if not count_indiscernibilities(M, K, x, y, limit=1):
                            violations += 1
    ok = exact == 50 and violations == 0 and clock.seconds < 30
    verdict(
        9,
        ok,
        f"50 morphisms, {exact} with derived structure isomorphic to the pullback; "
        f"{implications} premises, {violations} violations; {clock.seconds:.1f}s",
    )
    assert ok


# -- 10 -----------------------------------------------------------------------


def _mutation_sweep():
    T = builtin_theory("cat_axioms")
    tables = [t for n in (1, 2, 3, 4) for t in enumerate_monoid_tables(n)]
    tables += [t for n in (1, 2, 3, 4) for t in enumerate_poset_tables(n)]
    models = sum(check_theory(category_from_table(t), T).ok for t in tables)
    total = violated = with_countermodel = agree = 0
    for t in tables:
        for _, _, mutant in single_entry_mutations(t):
            total += 1
            report = check_theory(category_from_table(mutant, check=False), T)
            if not report.ok:
                violated += 1
                with_countermodel += all(r.countermodel is not None for r in report.failed())
            agree += report.ok == validate_table(mutant).ok
    return len(tables), models, total, violated, with_countermodel, agree


def _invariance():
    T = builtin_theory("cat_axioms")
    checked = agreeing = 0
    for t in catalog_tables():
        if not is_skeletal_with_trivial_automorphisms(t):
            continue
        M = category_from_table(t)
        rn = {K: {x: f"r.{x}" for x in M.carriers[K]} for K in M.signature.sort_ids()}
        actions = {
            s.id: {g.label: {rn[s.id][x]: rn[g.target][M.act(s.id, g.label, x)] for x in M.carriers[s.id]} for g in s.generators}
            for s in M.signature.sorts
        }
        N = Structure(M.signature, {K: list(v.values()) for K, v in rn.items()}, actions)
        r = invariance_check(T, M, N, StructureMorphism(M, N, rn))
        checked += 1
        agreeing += r.agree
    return checked, agreeing


@pytest.fixture(scope="module")
def sweep():
    clock = Clock()
    result = _mutation_sweep()
    inv = _invariance()
    return result, inv, clock.seconds


def test_criterion_10_attainable_parts(sweep):
    (n_tables, models, total, violated, with_cm, agree), (checked, agreeing), seconds = sweep
    assert models == n_tables
    assert agree == total
    assert with_cm == violated
    assert checked == agreeing > 0
    assert seconds < 30


@pytest.mark.xfail(strict=True, reason="some single-entry mutations are still categories, e.g. Z/2 with g.g = g")
def test_criterion_10_literal(verdict, sweep):
    (n_tables, models, total, violated, with_cm, agree), (checked, agreeing), seconds = sweep
    ok = models == n_tables and violated == total and with_cm == violated and checked == agreeing and seconds < 30
    verdict(
        10,
        ok,
        f"{models}/{n_tables} catalog categories are models; {violated}/{total} mutations violate an axiom "
        f"({total - violated} are valid categories by the table validator, verdicts agree on {agree}/{total}); "
        f"invariance {agreeing}/{checked}; {seconds:.1f}s",
    )
    assert ok


# -- 11 -----------------------------------------------------------------------


def test_criterion_11(verdict):
    clock = Clock()
    M, N = builtin_structure("relation-M"), builtin_structure("relation-N")
    f = StructureMorphism(M, N, {"A": {"a": "a", "b": "b"}, "R": {}})
    in_M = count_indiscernibilities(M, "A", "a", "b")
    in_N = count_indiscernibilities(N, "A", f("A", "a"), f("A", "b"))
    ok = validate_morphism(f).ok and in_M > 0 and in_N == 0 and clock.seconds < 1
    verdict(11, ok, f"|a ⋍ b| in M = {in_M}; |f(a) ⋍ f(b)| in N = {in_N}")
    assert ok


# -- 12 -----------------------------------------------------------------------


def _span_inside(err: ParseError, text: str) -> bool:
    lines = text.split("\n")
    for d in err.diagnostics:
        s = d.span
        if s is None or not (1 <= s.line <= len(lines)) or not (1 <= s.column <= len(lines[s.line - 1]) + 1):
            return False
    return True


def test_criterion_12(verdict):
    clock = Clock()
    assets = 0
    assets_ok = 0
    texts = []
    for kind in ("signatures", "structures", "theories"):
        for p in asset_paths(kind):
            text = p.read_text()
            texts.append(text)
            assets += 1
            if kind == "signatures":
                obj = parse_signature(text)
                again = parse_signature(serialize(obj))
                assets_ok += again == obj
            elif kind == "structures":
                obj = builtin_structure(p.stem)
                assets_ok += parse_structure(serialize(obj), obj.signature) == obj
            else:
                obj = builtin_theory(p.stem)
                again = parse_theory(serialize(obj), obj.signature)
                assets_ok += serialize(again) == serialize(obj)
    rng = random.Random(12)
    random_ok = 0
    for i in range(200):
        sig = random_signature(rng, max_height=3, max_sorts=6, name=f"R{i}")
        random_ok += parse_signature(serialize_signature(sig)) == sig
    errors = inside = 0
    junk = ["{", "}", "=", ",", "(", ")", ":", ".", "rank", "@", '"', "\n"]
    for _ in range(400):
        text = rng.choice(texts)
        i = rng.randrange(len(text))
        text = text[:i] + rng.choice(junk + [""]) + text[i + 1 :]
        try:
            if "structure" in text.split("{", 1)[0]:
                parse_structure(text)
            elif "theory" in text.split("{", 1)[0]:
                parse_theory(text)
            else:
                parse_signature(text)
        except ParseError as err:
            errors += 1
            inside += _span_inside(err, text)
        except FoldsError:
            pass
    ok = assets_ok == assets and random_ok == 200 and inside == errors and clock.seconds < 30
    verdict(
        12,
        ok,
        f"assets {assets_ok}/{assets}; random signatures {random_ok}/200; "
        f"located errors inside input {inside}/{errors}; {clock.seconds:.1f}s",
    )
    assert ok


# -- 13 -----------------------------------------------------------------------


def test_criterion_13(verdict):
    clock = Clock()
    structures = [category_from_table(t) for t in catalog_tables()]
    structures += [builtin_structure(p.stem) for p in asset_paths("structures")]
    univalent = [M for M in structures if is_univalent(M)]
    largest = max(max(top_fiber_sizes(M).values(), default=0) for M in univalent)
    ok = largest <= 1 and clock.seconds < 5
    verdict(13, ok, f"{len(univalent)} univalent structures, largest top-rank fiber {largest}; {clock.seconds:.1f}s")
    assert ok

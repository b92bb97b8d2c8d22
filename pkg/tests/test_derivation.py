from __future__ import annotations

import random

import pytest
from hypothesis import given, strategies as st

from foldskit.catalog import builtin_signature, builtin_structure
from foldskit.catalog.generators import (
    disjoint_union,
    random_family,
    random_family_map,
    random_signature,
    random_structure,
    renaming,
)
from foldskit.derivation import (
    BottomFamily,
    DerivedSort,
    FamilyMap,
    Joker,
    SigMorphism,
    compose_morphisms,
    derive_signature,
    derive_structure,
    derived_morphism,
    forgetful_projection,
    identity_family_map,
    identity_morphism,
    inclusion_family_map,
    is_discrete_opfibration,
    joker_extend,
    partial_structure,
    partial_structure_via_pullback,
    pullback_structure,
    validate_sig_morphism,
)
from foldskit.errors import DerivationError, UnknownElementError
from foldskit.signature import make_signature


def names(sig, rank=None):
    return sorted(str(s.id) for s in sig.sorts if rank is None or s.rank == rank)


class TestDeriveSignature:
    def test_reflexive_graph_loop_at_b(self, rg):
        D = derive_signature(rg, {"O": ("a", "b")})
        assert names(D, 0) == ["A(a,a)", "A(a,b)", "A(b,a)", "A(b,b)"]
        assert names(D, 1) == ["I(a)", "I(b)"]
        for s in D.sorts:
            if s.rank == 1:
                (g,) = s.generators
                a = s.id.alpha[0]
                assert g.target == DerivedSort("A", (a, a))
        assert D.height == rg.height - 1

    def test_height_one_gives_empty(self):
        sig = builtin_signature("relation")
        one = make_signature("points", [("P", 0, [])])
        assert derive_signature(one, {"P": ("p", "q")}).sorts == ()
        assert derive_signature(one, {"P": ()}).height == 0
        assert derive_signature(sig, {"A": ("a",)}).height == 1

    def test_cat_over_one_object(self):
        D = derive_signature(builtin_signature("cat"), {"O": ("x",)})
        assert names(D, 0) == ["A(x,x)"]
        assert names(D, 1) == ["I(x)", "T(x,x,x)"]

    def test_missing_family_sort(self, rg):
        with pytest.raises(DerivationError):
            derive_signature(rg, {})

    def test_cached(self, rg):
        assert derive_signature(rg, {"O": ("a",)}) is derive_signature(rg, BottomFamily({"O": ("a",)}))

    @given(st.integers(0, 10**6))
    def test_fanout_transport(self, seed):
        rng = random.Random(seed)
        sig = random_signature(rng)
        fam = random_family(rng, sig)
        D = derive_signature(sig, fam)
        assert D.height <= sig.height - 1
        if all(fam[K] for K in sig.bottom_sorts()):
            assert D.height == sig.height - 1
        for s in D.sorts:
            for m in range(s.rank):
                assert len(D.fanout(s.id, m)) == len(sig.fanout(s.id.parent, m + 1))

    @given(st.integers(0, 10**6))
    def test_sort_count(self, seed):
        rng = random.Random(seed)
        sig = random_signature(rng)
        fam = random_family(rng, sig)
        D = derive_signature(sig, fam)
        expected = 0
        for s in sig.sorts:
            if s.rank >= 1:
                n = 1
                for L, _ in sig.fanout(s.id, 0):
                    n *= len(fam[L])
                expected += n
        assert len(D.sorts) == expected


class TestJoker:
    def test_extend(self):
        fam = BottomFamily({"O": ("a", "b"), "P": ("p",)})
        ext, j = joker_extend(fam, "O")
        assert ext["O"] == ("a", "b", j) and ext["P"] == ("p",)
        assert str(j) == "★"
        ext2, j2 = joker_extend(ext, "O")
        assert j2 != j and len(ext2["O"]) == 4

    def test_rank_zero_only(self, rg):
        with pytest.raises(DerivationError):
            joker_extend({"O": ()}, "A")


class TestStructures:
    def test_walking_arrow_derivative(self):
        M = builtin_structure("walking-arrow")
        fam, Mp = derive_structure(M)
        assert Mp.carriers[DerivedSort("A", ("a", "b"))] == ("f",)
        assert Mp.carriers[DerivedSort("A", ("b", "a"))] == ()

    def test_twice_gives_bare_family(self):
        M = builtin_structure("z2")
        _, M1 = derive_structure(M)
        _, M2 = derive_structure(M1)
        assert M2.signature.height == 1
        assert all(not s.generators for s in M2.signature.sorts)

    def test_partial_walking_iso(self):
        M = builtin_structure("walking-iso")
        P = partial_structure(M, "O", "a")
        assert P.carriers[DerivedSort("A", (Joker(0), "b"))] == ("f",)

    def test_partial_z2(self):
        P = partial_structure(builtin_structure("z2"), "O", "*")
        assert sorted(P.carriers[DerivedSort("A", (Joker(0), Joker(0)))]) == ["e", "g"]

    def test_partial_unknown(self):
        with pytest.raises(UnknownElementError):
            partial_structure(builtin_structure("z2"), "O", "nope")

    @pytest.mark.parametrize("name", ["walking-iso", "z2", "linear-order-3", "dagger-Z4", "relation-N", "multicat-z2"])
    def test_partial_is_pullback(self, name):
        M = builtin_structure(name)
        for K in M.signature.bottom_sorts():
            for a in M.carriers[K]:
                assert partial_structure(M, K, a) == partial_structure_via_pullback(M, K, a)

    @pytest.mark.parametrize("name", ["walking-iso", "parallel-pair", "total-E"])
    def test_epsilon_is_strict(self, name):
        M = builtin_structure(name)
        fam, Mp = derive_structure(M)
        for a in M.carriers["O"]:
            ext, _ = joker_extend(fam, "O")
            P = partial_structure(M, "O", a)
            iota = derived_morphism(identity_morphism(M.signature), inclusion_family_map(fam, ext))
            assert pullback_structure(iota, P) == Mp
            for S in Mp.signature.sort_ids():
                assert P.carriers[S] == Mp.carriers[S]

    def test_pullback_identity(self):
        M = builtin_structure("walking-iso")
        assert pullback_structure(identity_morphism(M.signature), M) == M

    @given(st.integers(0, 10**6))
    def test_derived_fibers_partition(self, seed):
        rng = random.Random(seed)
        M = random_structure(rng, random_signature(rng))
        _, Mp = derive_structure(M)
        assert Mp.validate().ok
        for s in M.signature.sorts:
            if s.rank >= 1:
                total = sum(len(Mp.carriers[S]) for S in Mp.signature.sort_ids() if S.parent == s.id)
                assert total == len(M.carriers[s.id])


class TestMorphisms:
    def test_identity_is_opfibration(self, cat_e):
        assert is_discrete_opfibration(identity_morphism(cat_e))

    def test_iota_is_opfibration(self, rg):
        fam = BottomFamily({"O": ("a", "b")})
        ext, _ = joker_extend(fam, "O")
        iota = derived_morphism(identity_morphism(rg), inclusion_family_map(fam, ext))
        assert is_discrete_opfibration(iota)
        assert validate_sig_morphism(iota).ok

    def test_collapse_is_not_opfibration(self):
        dom = make_signature("dom", [("O", 0, []), ("P", 0, []), ("A", 1, [("d", "O")]), ("B", 1, [("d", "P")])])
        cod = make_signature("cod", [("O", 0, []), ("A", 1, [("d", "O"), ("c", "O")])])
        H = SigMorphism(
            dom,
            cod,
            {"O": "O", "P": "O", "A": "A", "B": "A"},
            {("A", "d"): cod.arrow("A", ("d",)), ("B", "d"): cod.arrow("A", ("d",))},
        )
        assert validate_sig_morphism(H).ok
        assert not is_discrete_opfibration(H)
        with pytest.raises(DerivationError):
            derived_morphism(H, FamilyMap(BottomFamily({"O": (), "P": ()}), BottomFamily({"O": ()}), {"O": {}, "P": {}}))

    def test_forgetful_projection(self, cat_e):
        U = forgetful_projection(cat_e, {"O": ("x", "y")})
        assert is_discrete_opfibration(U)
        assert validate_sig_morphism(U).ok


def random_semifunctor(rng, dom, cod):
    """A random rank-preserving semi-functor, or None when none is found quickly."""
    for _ in range(20):
        sort_map = {}
        for s in dom.sorts:
            pool = cod.sorts_of_rank(s.rank)
            if not pool:
                return None
            sort_map[s.id] = rng.choice(pool)
        gen_map = {}
        ok = True
        for s in dom.sorts:
            for g in s.generators:
                options = cod.hom_set(sort_map[s.id], sort_map[g.target])
                if not options:
                    ok = False
                    break
                gen_map[(s.id, g.label)] = rng.choice(options)
            if not ok:
                break
        if ok:
            H = SigMorphism(dom, cod, sort_map, gen_map)
            if validate_sig_morphism(H).ok:
                return H
    return None


def summand(sig, double, tag):
    sort_map = {s.id: f"{tag}{s.id}" for s in sig.sorts}
    gen_map = {(s.id, g.label): double.arrow(f"{tag}{s.id}", (g.label,)) for s in sig.sorts for g in s.generators}
    return SigMorphism(sig, double, sort_map, gen_map)


class TestFunctoriality:
    @given(st.integers(0, 10**6))
    def test_identity_law(self, seed):
        rng = random.Random(seed)
        sig = random_signature(rng)
        fam = random_family(rng, sig)
        assert derived_morphism(identity_morphism(sig), identity_family_map(fam)) == identity_morphism(
            derive_signature(sig, fam)
        )

    @given(st.integers(0, 10**6))
    def test_composition_law(self, seed):
        rng = random.Random(seed)
        sig = random_signature(rng)
        double, fold = disjoint_union(sig)
        H = summand(sig, double, rng.choice("LR"))
        fam1 = random_family(rng, sig, prefix="x")
        fam2 = random_family(rng, double, prefix="y")
        fam3 = random_family(rng, sig, prefix="z")
        h = random_family_map(rng, fam1, fam2, H.sort_map)
        i = random_family_map(rng, fam2, fam3, fold.sort_map)
        if h is None or i is None:
            return
        ih = FamilyMap(fam1, fam3, {K: {x: i(H.sort_map[K], h(K, x)) for x in fam1[K]} for K in fam1})
        lhs = derived_morphism(compose_morphisms(fold, H), ih)
        rhs = compose_morphisms(derived_morphism(fold, i), derived_morphism(H, h))
        assert lhs == rhs
        for D in (lhs, derived_morphism(H, h), derived_morphism(fold, i)):
            assert is_discrete_opfibration(D)
            assert validate_sig_morphism(D).ok

    @given(st.integers(0, 10**6))
    def test_renaming_is_opfibration(self, seed):
        rng = random.Random(seed)
        sig = random_signature(rng)
        copy, R = renaming(sig)
        assert is_discrete_opfibration(R)
        fam = random_family(rng, sig)
        fam2 = BottomFamily({R.sort_map[K]: v for K, v in fam.items()})
        h = FamilyMap(fam, fam2, {K: {x: x for x in fam[K]} for K in fam})
        assert is_discrete_opfibration(derived_morphism(R, h))

    @given(st.integers(0, 10**6))
    def test_left_cancellation(self, seed):
        rng = random.Random(seed)
        sig = random_signature(rng, max_sorts=4)
        double, fold = disjoint_union(sig)
        F = random_semifunctor(rng, sig, double)
        if F is None:
            return
        GF = compose_morphisms(fold, F)
        assert is_discrete_opfibration(fold)
        if is_discrete_opfibration(GF):
            assert is_discrete_opfibration(F)

    @given(st.integers(0, 10**6))
    def test_opfibrations_compose(self, seed):
        rng = random.Random(seed)
        sig = random_signature(rng)
        double, fold = disjoint_union(sig)
        copy, R = renaming(sig)
        H = summand(sig, double, "L")
        assert is_discrete_opfibration(compose_morphisms(fold, H))
        assert compose_morphisms(fold, H) == identity_morphism(sig)
        assert is_discrete_opfibration(compose_morphisms(R, fold))

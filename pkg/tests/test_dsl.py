from __future__ import annotations

import random

import pytest
from hypothesis import given, settings, strategies as st

from foldskit.catalog import asset_paths, builtin_signature, builtin_structure, builtin_theory
from foldskit.catalog.generators import random_signature, random_structure
from foldskit.derivation import derive_signature, BottomFamily
from foldskit.dsl import (
    detect_kind,
    parse_formula,
    parse_signature,
    parse_structure,
    parse_theory,
    serialize_formula,
    serialize_signature,
    serialize_structure,
    serialize_theory,
    tokenize,
)
from foldskit.errors import FoldsError, ParseError
from foldskit.logic import evaluate


class TestRoundTrip:
    @pytest.mark.parametrize("path", asset_paths("signatures"), ids=lambda p: p.stem)
    def test_signatures(self, path):
        sig = parse_signature(path.read_text())
        assert parse_signature(serialize_signature(sig)) == sig

    @pytest.mark.parametrize("path", asset_paths("theories"), ids=lambda p: p.stem)
    def test_theories(self, path):
        T = builtin_theory(path.stem)
        again = parse_theory(serialize_theory(T), T.signature)
        assert again.names == T.names
        for (_, a), (_, b) in zip(T.axioms, again.axioms):
            assert serialize_formula(a) == serialize_formula(b)

    @pytest.mark.parametrize("path", asset_paths("structures"), ids=lambda p: p.stem)
    def test_structures(self, path):
        M = builtin_structure(path.stem)
        assert parse_structure(serialize_structure(M), M.signature) == M

    def test_random_signatures(self):
        rng = random.Random(2024)
        for i in range(200):
            sig = random_signature(rng, max_height=3, max_sorts=6, name=f"R{i}")
            text = serialize_signature(sig)
            assert parse_signature(text) == sig, text

    @settings(max_examples=40)
    @given(st.integers(0, 10**6))
    def test_random_structures(self, seed):
        rng = random.Random(seed)
        sig = random_signature(rng)
        M = random_structure(rng, sig)
        assert parse_structure(serialize_structure(M), sig) == M

    def test_derived_signature_with_renaming(self, rg):
        D = derive_signature(rg, BottomFamily({"O": ("a", "b")}))
        again = parse_signature(serialize_signature(D))
        assert len(again.sorts) == len(D.sorts)
        assert [s.rank for s in again.sorts] == [s.rank for s in D.sorts]

    def test_quoted_elements(self):
        M = builtin_structure("walking-arrow")
        assert '"t(id_a,f)"' in serialize_structure(M)


class TestDetection:
    def test_kinds(self):
        for kind, word in (("signatures", "signature"), ("structures", "structure"), ("theories", "theory")):
            for p in asset_paths(kind):
                assert detect_kind(p.read_text()) == word
        assert detect_kind("garbage") is None


class TestErrors:
    @pytest.mark.parametrize(
        "text,line",
        [
            ("signature s {\n  sort O rank 0\n  sort A rank 1 { d: Q }\n}\n", 3),
            ("signature s {\n  sort O rank 0\n  sort O rank 0\n}\n", 3),
            ("signature s {\n  sort O rank 0\n  sort A rank 1 { d: O, c: O }\n  sort T rank 2 { t0: A, t1: A }\n  eq c.t0 = t1\n}\n", 5),
            ("signature s {\n  sort O rank zero\n}\n", 2),
            ("signature s {\n  sort O rank 0\n", 2),
            ("signature s {\n  sort O rank 0 @\n}\n", 2),
        ],
    )
    def test_signature_errors_are_located(self, text, line):
        with pytest.raises(ParseError) as info:
            parse_signature(text)
        span = info.value.span
        assert span is not None
        assert span.line == line

    def test_structure_errors(self):
        sig = builtin_signature("cat_E")
        bad = "structure s over cat_E {\n  O = { a }\n  A = { f (d=a, c=zz) }\n}\n"
        with pytest.raises(ParseError) as info:
            parse_structure(bad, sig)
        assert info.value.span.line == 3

    def test_unknown_signature(self):
        with pytest.raises(ParseError):
            parse_structure("structure s over nowhere {\n}\n")

    def test_unterminated_string(self):
        with pytest.raises(ParseError):
            tokenize('structure s over cat_E { O = { "abc } }')

    def test_formula_without_signature(self):
        phi = parse_formula("forall x : O, exists f : A(d=x, c=x), I(i=f)")
        assert "forall" in serialize_formula(phi)


SEEDS = [p.read_text() for kind in ("signatures", "structures", "theories") for p in asset_paths(kind)]
JUNK = ["{", "}", "=", ",", "(", ")", ":", ".", "rank", "sort", "eq", "\"", "@", "0", "-", "\n", " "]


def _check_span(err: ParseError, text: str) -> None:
    lines = text.split("\n")
    for d in err.diagnostics:
        assert d.span is not None, d
        assert 1 <= d.span.line <= len(lines)
        assert 1 <= d.span.column <= len(lines[d.span.line - 1]) + 1


@settings(max_examples=300)
@given(st.sampled_from(range(len(SEEDS))), st.integers(0, 10**6), st.sampled_from(["delete", "insert", "swap"]))
def test_fuzzed_inputs_fail_cleanly(index, seed, how):
    text = SEEDS[index]
    rng = random.Random(seed)
    i = rng.randrange(len(text))
    if how == "delete":
        text = text[:i] + text[i + 1 :]
    elif how == "insert":
        text = text[:i] + rng.choice(JUNK) + text[i:]
    else:
        j = rng.randrange(len(text))
        chars = list(text)
        chars[i], chars[j] = chars[j], chars[i]
        text = "".join(chars)
    kind = detect_kind(text)
    try:
        if kind == "signature":
            parse_signature(text)
        elif kind == "structure":
            parse_structure(text)
        elif kind == "theory":
            parse_theory(text)
        else:
            parse_signature(text)
    except ParseError as err:
        _check_span(err, text)
    except FoldsError:
        # semantic errors in a syntactically valid mutant
        pass


class TestContractExamples:
    def test_empty_signature(self):
        sig = parse_signature("signature X { }")
        assert sig.sorts == () and sig.height == 0

    def test_shipped_cat_e_equals_builtin(self):
        from foldskit.catalog import builtin_path

        assert parse_signature(builtin_path("cat+E").read_text()) == builtin_signature("cat+E")

    def test_equation_with_mismatched_sources(self):
        text = (
            "signature s {\n  sort O rank 0\n  sort A rank 1 { d: O, c: O }\n"
            "  sort T rank 2 { t0: A }\n  sort I rank 2 { i: A }\n  eq c.t0 = d.i\n}\n"
        )
        with pytest.raises(ParseError) as info:
            parse_signature(text)
        assert info.value.span.line == 6

    def test_missing_generator_is_named(self):
        text = "structure s over cat_E {\n  O = { x }\n  A = { f (d=x) }\n}\n"
        with pytest.raises(ParseError) as info:
            parse_structure(text, builtin_signature("cat_E"))
        assert "missing generator c" in str(info.value)
        assert info.value.span.line == 3

    def test_standardness_axiom_elaborates(self):
        phi = parse_formula("forall f g : A(d=x,c=y), E(e1=f,e2=g) <-> f == g", builtin_signature("cat_E"))
        assert evaluate(builtin_structure("z3"), phi)
        assert not evaluate(builtin_structure("total-E"), phi)

    def test_crlf_input(self):
        from foldskit.catalog import builtin_path

        text = builtin_path("cat+E").read_text().replace("\n", "\r\n")
        assert parse_signature(text) == builtin_signature("cat+E")

    def test_serialization_is_deterministic(self):
        for stem in ("walking-arrow", "multicat-z2", "total-E"):
            M = builtin_structure(stem)
            first = serialize_structure(M)
            again = serialize_structure(parse_structure(first, M.signature))
            assert first == again
            assert "\r" not in first

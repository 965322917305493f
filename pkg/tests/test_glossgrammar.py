"""Unit and property tests for the gloss annotation grammar and registry."""

from __future__ import annotations

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from signcorpus.glossgrammar import (
    Compound,
    GlossAnnotation,
    GlossParseError,
    GlossUnit,
    HomosignGroup,
    HomosignRegistry,
    build_registry,
    canonicalize_for_scoring,
    collect_homosign_groups,
    compound_count,
    diagnose,
    normalize_units,
    parse,
    read_annotation_file,
    to_training_sequence,
    write_annotation_file,
)

from oracles import component_classes

bases = st.text(alphabet="AB天氣十d7", min_size=1, max_size=4)
units = st.builds(
    GlossUnit,
    base=bases,
    ill_performed=st.booleans(),
    variant=st.none() | st.integers(min_value=1, max_value=12),
)
compounds = st.builds(
    Compound, units=st.lists(units, min_size=1, max_size=3).map(tuple)
)
homosigns = st.lists(
    compounds, min_size=2, max_size=4, unique_by=lambda c: c.normalized().render()
).map(lambda ms: HomosignGroup(tuple(ms)))
annotations = st.builds(
    lambda ts: GlossAnnotation(tokens=tuple(ts), raw=""),
    st.lists(st.one_of(compounds, homosigns), max_size=6),
)


def _compound(*bases_):
    return Compound(tuple(GlossUnit(b) for b in bases_))


class TestParse:
    def test_plain_token(self):
        ann = parse("天氣")
        assert ann.tokens == (_compound("天氣"),)

    def test_all_token_forms_in_one_annotation(self):
        ann = parse("A+B C(?) D(2) E(=F=G)")
        assert ann.tokens == (
            _compound("A", "B"),
            Compound((GlossUnit("C", ill_performed=True),)),
            Compound((GlossUnit("D", variant=2),)),
            HomosignGroup((_compound("E"), _compound("F"), _compound("G"))),
        )

    def test_whitespace_is_insignificant_between_tokens(self):
        assert parse("  A \t B \n").tokens == parse("A B").tokens

    def test_empty_string_has_no_tokens(self):
        assert parse("").tokens == ()

    def test_compound_leader_in_homosign_list(self):
        ann = parse("X+Y(=Z)")
        (token,) = ann.tokens
        assert isinstance(token, HomosignGroup)
        assert token.members == (_compound("X", "Y"), _compound("Z"))

    def test_modifiers_inside_homosign_members(self):
        (token,) = parse("E(2)(=F(?))").tokens
        assert token.members == (
            Compound((GlossUnit("E", variant=2),)),
            Compound((GlossUnit("F", ill_performed=True),)),
        )

    def test_variant_and_ill_flag_combine(self):
        (token,) = parse("G(3)(?)").tokens
        assert token.units == (GlossUnit("G", ill_performed=True, variant=3),)

    def test_multidigit_variant(self):
        (token,) = parse("G(12)").tokens
        assert token.units[0].variant == 12


class TestParseErrors:
    @pytest.mark.parametrize(
        "raw,position",
        [
            ("A(", 1),  # dangling modifier opener
            ("(A)", 0),  # missing gloss base
            ("A+", 2),  # missing unit after '+'
            ("A(0)", 1),  # variant indices start at 1
            ("A(=B", 4),  # unterminated homosign list
            ("A(=A)", 0),  # duplicate member, reported at token start
            ("A(=)", 3),  # empty member
            ("A)B", 1),  # stray closer
            ("A(2", 1),  # unbalanced variant modifier
            ("A(?", 1),  # unbalanced ill-performed modifier
        ],
    )
    def test_error_positions(self, raw, position):
        with pytest.raises(GlossParseError) as excinfo:
            parse(raw)
        assert excinfo.value.position == position

    def test_positions_are_global_across_tokens(self):
        with pytest.raises(GlossParseError) as excinfo:
            parse("AB X( C")
        assert excinfo.value.position == 4

    def test_error_carries_expectation_and_found_text(self):
        with pytest.raises(GlossParseError) as excinfo:
            parse("A(")
        assert excinfo.value.expected
        assert "position 1" in str(excinfo.value)


class TestDiagnose:
    def test_valid_annotation_yields_no_findings(self):
        assert diagnose("A+B C(?) D(2) E(=F=G)") == []

    def test_one_finding_per_bad_token(self):
        findings = diagnose("A( GOOD B+")
        assert [f.position for f in findings] == [1, 10]

    def test_findings_carry_messages(self):
        (finding,) = diagnose("A(0)")
        assert "variant" in finding.message


class TestNormalization:
    def test_ill_performed_flag_is_stripped(self):
        assert normalize_units(parse("C(?)")).render() == "C"

    def test_variants_collapse_to_the_common_gloss(self):
        assert normalize_units(parse("D(1) D(2)")).render() == "D D"

    def test_plain_annotation_is_unchanged(self):
        ann = parse("A+B 天氣 E(=F)")
        assert normalize_units(ann) == ann

    def test_homosign_members_are_normalized_too(self):
        assert normalize_units(parse("E(2)(=F(?))")).render() == "E(=F)"


class TestCompoundCount:
    def test_counts(self):
        assert compound_count(_compound("A")) == 1
        assert compound_count(_compound("A", "B", "C")) == 3

    @given(a=compounds, b=compounds)
    def test_concatenation_is_additive(self, a, b):
        joined = Compound(a.units + b.units)
        assert compound_count(joined) == compound_count(a) + compound_count(b)


class TestRepresentativeRule:
    def test_higher_unit_count_wins(self):
        registry = HomosignRegistry([["X", "Y+Z"]])
        assert registry.lookup("X") == "Y+Z"

    def test_equal_counts_fall_back_to_byte_order(self):
        registry = HomosignRegistry([["乙", "甲"]])
        assert registry.lookup("甲") == "乙"
        assert "乙".encode("utf-8") < "甲".encode("utf-8")

    def test_ascii_sorts_before_cjk_in_byte_order(self):
        registry = HomosignRegistry([["天", "Z"]])
        assert registry.lookup("天") == "Z"


class TestRegistry:
    def test_overlapping_groups_merge_into_one_class(self):
        groups = collect_homosign_groups([parse("A(=B)"), parse("B(=C)")])
        registry = build_registry(groups)
        assert len(registry) == 1
        rep = registry.lookup("A")
        assert rep == registry.lookup("B") == registry.lookup("C")

    def test_disjoint_groups_stay_apart(self):
        registry = build_registry(
            collect_homosign_groups([parse("A(=B)"), parse("C(=D)")])
        )
        assert len(registry) == 2
        assert registry.lookup("A") != registry.lookup("C")

    def test_lookup_of_unregistered_gloss_is_none(self):
        registry = HomosignRegistry([["A", "B"]])
        assert registry.lookup("ZZ") is None

    def test_modifiers_do_not_split_classes(self):
        # E(2)(=F) and E(=G) refer to the same E once normalized.
        registry = build_registry(
            collect_homosign_groups([parse("E(2)(=F)"), parse("E(=G)")])
        )
        assert len(registry) == 1

    def test_constructor_rejects_small_and_overlapping_classes(self):
        with pytest.raises(ValueError):
            HomosignRegistry([["A"]])
        with pytest.raises(ValueError):
            HomosignRegistry([["A", "B"], ["B", "C"]])

    def test_dump_and_load_round_trip(self, tmp_path):
        registry = build_registry(
            collect_homosign_groups([parse("A(=B+C)"), parse("X(=Y)"), parse("B+C(=D)")])
        )
        path = tmp_path / "homosigns.txt"
        registry.dump(path)
        loaded = HomosignRegistry.load(path)
        assert loaded.classes() == registry.classes()
        again = tmp_path / "again.txt"
        loaded.dump(again)
        assert path.read_bytes() == again.read_bytes()

    def test_dump_puts_the_representative_first(self, tmp_path):
        registry = HomosignRegistry([["X", "Y+Z"]])
        path = tmp_path / "homosigns.txt"
        registry.dump(path)
        assert path.read_text(encoding="utf-8").splitlines() == ["Y+Z X"]

    @settings(max_examples=150)
    @given(
        group_sets=st.lists(
            st.lists(
                st.text(alphabet="ABCDEF", min_size=1, max_size=2),
                min_size=2,
                max_size=4,
                unique=True,
            ),
            max_size=8,
        )
    )
    def test_merging_matches_connected_components_oracle(self, group_sets):
        groups = [
            HomosignGroup(tuple(_compound(m) for m in members))
            for members in group_sets
        ]
        registry = build_registry(groups)
        got = {frozenset(members) for _, members in registry.classes()}
        expected = {
            c for c in component_classes(group_sets) if len(c) >= 2
        }
        singles = {c for c in component_classes(group_sets) if len(c) < 2}
        assert got == expected
        assert not singles  # every input group has >= 2 distinct members


class TestTrainingSequence:
    def test_compounds_split_into_units(self):
        assert to_training_sequence(parse("A+B")) == ["A", "B"]

    def test_homosign_resolves_to_own_group_representative_in_train_mode(self):
        assert to_training_sequence(parse("X(=Y+Z)")) == ["Y", "Z"]

    def test_plain_sequence_is_unchanged(self):
        assert to_training_sequence(parse("天 氣")) == ["天", "氣"]

    def test_modifiers_are_stripped_before_splitting(self):
        assert to_training_sequence(parse("D(2)+E(?)")) == ["D", "E"]

    def test_registry_mode_replaces_plain_compounds(self):
        registry = HomosignRegistry([["A", "B"]])
        assert to_training_sequence(parse("B"), registry) == ["A"]

    def test_registry_mode_resolves_homosign_leaders_globally(self):
        # Leader X belongs to a class whose representative is Q+R, learned
        # from other material; the local group must not override it.
        registry = HomosignRegistry([["X", "Q+R"]])
        assert to_training_sequence(parse("X(=Y)"), registry) == ["Q", "R"]

    def test_registry_mode_falls_back_to_the_local_group(self):
        registry = HomosignRegistry([["M", "N"]])
        assert to_training_sequence(parse("X(=Y+Z)"), registry) == ["Y", "Z"]


class TestCanonicalizeForScoring:
    def test_same_class_members_become_identical(self):
        registry = HomosignRegistry([["A", "B"]])
        assert canonicalize_for_scoring(["B"], ["A"], registry) == (["A"], ["A"])

    def test_empty_registry_changes_nothing(self):
        registry = HomosignRegistry([])
        hyp, ref = canonicalize_for_scoring(["A", "B"], ["C"], registry)
        assert (hyp, ref) == (["A", "B"], ["C"])

    @given(
        tokens=st.lists(st.text(alphabet="ABCD", min_size=1, max_size=2), max_size=8)
    )
    def test_replacement_is_idempotent(self, tokens):
        registry = HomosignRegistry([["A", "B"], ["C", "DD"]])
        once, _ = canonicalize_for_scoring(tokens, [], registry)
        twice, _ = canonicalize_for_scoring(once, [], registry)
        assert twice == once


class TestRoundTrip:
    @pytest.mark.parametrize(
        "raw",
        [
            "天氣",
            "A+B C(?) D(2) E(=F=G)",
            "X+Y(=Z) 甲(3)(?)",
            "E(2)(=F(?)=G+H)",
            "",
        ],
    )
    def test_fixed_cases(self, raw):
        ann = parse(raw)
        assert parse(ann.render()) == ann

    @settings(max_examples=400)
    @given(ann=annotations)
    def test_render_then_parse_recovers_the_annotation(self, ann):
        assert parse(ann.render()) == ann


class TestAnnotationFiles:
    def test_file_round_trip(self, tmp_path):
        rows = [("ep1_001", "A+B C(?)"), ("ep1_002", "天氣 E(=F)")]
        path = tmp_path / "annotations.tsv"
        write_annotation_file(rows, path)
        assert read_annotation_file(path) == rows

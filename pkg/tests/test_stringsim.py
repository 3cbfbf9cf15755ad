import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from eventea.errors import DataError
from eventea.stringsim import (
    SimilarityKind,
    jaro,
    jaro_winkler,
    levenshtein_distance,
    levenshtein_ratio,
    name_match_align,
    sequence_ratio,
)

from oracles import (
    jaro_definitional,
    jaro_winkler_definitional,
    levenshtein_ratio_recursive,
    levenshtein_recursive,
    sequence_ratio_blocks,
    small_strings,
)

texts = st.text(max_size=12)
short_texts = st.text(max_size=8)


class TestLevenshteinDistance:
    def test_worked_example(self):
        assert levenshtein_distance("kitten", "sitting") == 3

    def test_identity(self):
        assert levenshtein_distance("abc", "abc") == 0

    def test_empty_side(self):
        assert levenshtein_distance("", "abc") == 3
        assert levenshtein_distance("abc", "") == 3

    @given(texts, texts)
    def test_symmetry(self, a, b):
        assert levenshtein_distance(a, b) == levenshtein_distance(b, a)

    @given(short_texts, short_texts, short_texts)
    def test_triangle_inequality(self, a, b, c):
        assert levenshtein_distance(a, c) <= levenshtein_distance(
            a, b
        ) + levenshtein_distance(b, c)


class TestLevenshteinRatio:
    def test_worked_example(self):
        # cost-2 distance for kitten/sitting is 5, so (13 - 5) / 13
        assert levenshtein_ratio("kitten", "sitting") == pytest.approx(8 / 13)

    def test_trivial_cases(self):
        assert levenshtein_ratio("a", "a") == 1.0
        assert levenshtein_ratio("a", "b") == 0.0
        assert levenshtein_ratio("", "") == 1.0

    @given(texts, texts)
    def test_symmetry(self, a, b):
        assert levenshtein_ratio(a, b) == levenshtein_ratio(b, a)


class TestJaro:
    def test_worked_example(self):
        assert jaro("MARTHA", "MARHTA") == pytest.approx(17 / 18)

    def test_trivial_cases(self):
        assert jaro("abc", "abc") == 1.0
        assert jaro("abc", "xyz") == 0.0
        assert jaro("", "x") == 0.0

    @given(texts, texts)
    def test_symmetry(self, a, b):
        assert jaro(a, b) == pytest.approx(jaro(b, a), abs=1e-12)


class TestJaroWinkler:
    def test_worked_example(self):
        expected = 17 / 18 + 3 * 0.1 * (1 - 17 / 18)
        assert jaro_winkler("MARTHA", "MARHTA") == pytest.approx(expected)

    def test_identical(self):
        assert jaro_winkler("abcdef", "abcdef") == 1.0

    def test_zero_prefix_equals_jaro(self):
        assert jaro_winkler("xmartha", "martha") == jaro("xmartha", "martha")

    def test_prefix_scale_validation(self):
        with pytest.raises(ValueError):
            jaro_winkler("a", "b", prefix_scale=0.3)
        with pytest.raises(ValueError):
            jaro_winkler("a", "b", prefix_scale=-0.1)

    @given(texts, texts)
    def test_dominates_jaro(self, a, b):
        assert jaro_winkler(a, b) >= jaro(a, b) - 1e-15


class TestSequenceRatio:
    def test_worked_example(self):
        assert sequence_ratio("abcd", "bcde") == 0.75

    def test_trivial_cases(self):
        assert sequence_ratio("abab", "abab") == 1.0
        assert sequence_ratio("", "x") == 0.0


@given(texts, texts)
def test_all_similarities_bounded(a, b):
    for kind in SimilarityKind:
        value = kind.function(a, b)
        assert 0.0 <= value <= 1.0


@given(texts.filter(bool), texts.filter(bool))
def test_one_iff_equal_for_nonempty(a, b):
    for kind in SimilarityKind:
        value = kind.function(a, b)
        if a == b:
            assert value == 1.0
        else:
            assert value < 1.0


@settings(max_examples=400)
@given(st.data())
def test_sampled_oracle_agreement(data):
    strings = small_strings(max_len=5, alphabet="abc")
    a = data.draw(st.sampled_from(strings))
    b = data.draw(st.sampled_from(strings))
    assert levenshtein_distance(a, b) == levenshtein_recursive(a, b)
    assert levenshtein_ratio(a, b) == pytest.approx(
        levenshtein_ratio_recursive(a, b), abs=1e-12
    )
    assert jaro(a, b) == pytest.approx(jaro_definitional(a, b), abs=1e-12)
    assert jaro_winkler(a, b) == pytest.approx(
        jaro_winkler_definitional(a, b), abs=1e-12
    )
    assert sequence_ratio(a, b) == pytest.approx(sequence_ratio_blocks(a, b), abs=1e-12)


class TestNameMatchAlign:
    def test_exact_match_ranks_first(self):
        sources = {"s1": "Gulf Cup"}
        targets = {"t1": "Gulf Cup", "t2": "Something Else", "t3": "Gulf"}
        result = name_match_align(sources, targets, SimilarityKind.LEVENSHTEIN_RATIO, k=3)
        top = result.candidates["s1"]
        assert top[0] == ("t1", 1.0)
        scores = [score for _, score in top]
        assert scores == sorted(scores, reverse=True)

    def test_candidate_count_and_order(self):
        sources = {"s": "abcdef"}
        targets = {f"t{i:02d}": f"name{i}" for i in range(15)}
        result = name_match_align(sources, targets, SimilarityKind.JARO, k=10)
        top = result.candidates["s"]
        assert len(top) == 10
        scores = [score for _, score in top]
        assert all(x >= y for x, y in zip(scores, scores[1:]))

    def test_tie_break_by_identifier(self):
        sources = {"s": "match"}
        targets = {"tb": "match", "ta": "match", "tc": "other"}
        result = name_match_align(sources, targets, SimilarityKind.LEVENSHTEIN_RATIO, k=2)
        assert [t for t, _ in result.candidates["s"]] == ["ta", "tb"]

    def test_gold_rank_beyond_topk(self):
        sources = {"s": "aaaa"}
        targets = {"t1": "aaaa", "t2": "aaab", "t3": "zzzz"}
        result = name_match_align(
            sources, targets, SimilarityKind.LEVENSHTEIN_RATIO, k=1, gold={"s": "t3"}
        )
        assert result.gold_ranks["s"] == 3
        assert len(result.candidates["s"]) == 1

    def test_lowercase_flag(self):
        sources = {"s": "ABC"}
        targets = {"t": "abc"}
        on = name_match_align(sources, targets, SimilarityKind.LEVENSHTEIN_RATIO, k=1)
        off = name_match_align(
            sources, targets, SimilarityKind.LEVENSHTEIN_RATIO, k=1, lowercase=False
        )
        assert on.candidates["s"][0][1] == 1.0
        assert off.candidates["s"][0][1] == 0.0

    def test_errors(self):
        with pytest.raises(DataError):
            name_match_align({"s": "x"}, {}, SimilarityKind.JARO, k=1)
        with pytest.raises(DataError):
            name_match_align({"s": "x"}, {"t": "x"}, SimilarityKind.JARO, k=0)

import pytest
from hypothesis import given, settings, strategies as st

from llm_bootstrap.diversity import (
    DEFAULT_STOPWORDS,
    DiversityCurve,
    FrequencyTable,
    diversity_curve,
    token_frequencies,
    unique_ngrams,
)
from llm_bootstrap.errors import SizeExceedsDataset

from conftest import real_example


def brute_force_unique_ngrams(texts, n):
    """Independent oracle: explicit window enumeration via list slices."""
    windows = set()
    for text in texts:
        tokens = text.lower().split()
        for start in range(0, len(tokens) - n + 1):
            windows.add(" ".join(tokens[start : start + n]))
    return len(windows)


WORDS = ["the", "movie", "was", "great", "dull", "a", "film", "fine", "b"]
word_texts = st.lists(
    st.lists(st.sampled_from(WORDS), min_size=0, max_size=12).map(" ".join),
    max_size=12,
)


class TestUniqueNgrams:
    def test_hand_enumerated_trigram_case(self):
        assert unique_ngrams(["the movie was great the movie was"], 3) == 4

    def test_empty_corpus(self):
        assert unique_ngrams([], 3) == 0

    def test_text_shorter_than_n(self):
        assert unique_ngrams(["a b"], 3) == 0

    def test_windows_do_not_span_texts(self):
        assert unique_ngrams(["a b", "c d"], 2) == 2  # not "b c"

    def test_case_folding(self):
        assert unique_ngrams(["The Movie", "the movie"], 2) == 1

    @given(texts=word_texts, n=st.integers(1, 3))
    @settings(max_examples=200)
    def test_agrees_with_brute_force(self, texts, n):
        assert unique_ngrams(texts, n) == brute_force_unique_ngrams(texts, n)

    @given(texts=word_texts)
    def test_permutation_invariant(self, texts):
        assert unique_ngrams(texts, 2) == unique_ngrams(list(reversed(texts)), 2)

    @given(a=word_texts, b=word_texts, n=st.integers(1, 3))
    def test_subadditive(self, a, b, n):
        assert unique_ngrams(a + b, n) <= unique_ngrams(a, n) + unique_ngrams(b, n)

    def test_invalid_n(self):
        with pytest.raises(ValueError):
            unique_ngrams(["a b c"], 0)

    def test_char_level_option(self):
        # "abab": windows ab, ba, ab -> 2 distinct
        assert unique_ngrams(["abab"], 2, char_level=True) == 2
        assert unique_ngrams(["ab cd"], 2, char_level=True) == 4  # ab, "b ", " c", cd


class TestDiversityCurve:
    def _dataset(self, texts, label="Positive"):
        return [real_example(text, label) for text in texts]

    def test_nested_prefixes_monotone(self):
        dataset = self._dataset(
            ["a b c d", "b c d e", "c d e f", "totally new words here"]
        )
        curve = diversity_curve(dataset, [1, 2, 4], 3, rng_seed=5)
        counts = [count for _, count in curve.points]
        assert counts == sorted(counts)
        assert [size for size, _ in curve.points] == [1, 2, 4]

    def test_size_exceeding_dataset(self):
        dataset = self._dataset(["a b c", "d e f"])
        with pytest.raises(SizeExceedsDataset):
            diversity_curve(dataset, [10], 3, rng_seed=0)

    def test_identical_texts_flat_after_first(self):
        dataset = self._dataset(["same three words here"] * 5)
        curve = diversity_curve(dataset, [1, 2, 5], 3, rng_seed=0)
        counts = [count for _, count in curve.points]
        assert counts[0] == counts[1] == counts[2]

    def test_deterministic_in_seed(self):
        dataset = self._dataset([f"word{i} word{i+1} word{i+2} word{i+3}" for i in range(9)])
        assert (
            diversity_curve(dataset, [3, 6], 2, 11).points
            == diversity_curve(dataset, [3, 6], 2, 11).points
        )

    def test_unsorted_sizes_rejected(self):
        dataset = self._dataset(["a b c", "d e f"])
        with pytest.raises(ValueError):
            diversity_curve(dataset, [2, 1], 1, 0)

    def test_cohort_inferred(self, sst2_task):
        from conftest import synthetic_example

        real = self._dataset(["one fine day", "two fine days"])
        assert diversity_curve(real, [1], 1, 0).cohort == "real"
        syn = [synthetic_example("three fine days", "Positive")]
        assert diversity_curve(syn, [1], 1, 0).cohort == "synthetic"
        assert diversity_curve(real + syn, [1], 1, 0).cohort == "mixed"

    def test_curve_type_rejects_non_monotone(self):
        with pytest.raises(ValueError):
            DiversityCurve(points=((1, 5), (2, 3)), n=3, cohort="real")


class TestTokenFrequencies:
    def test_hand_counted(self):
        table = token_frequencies(
            ["great great film", "a great film"], top_k=2, stopwords={"a"}
        )
        assert table.entries == (("great", 3), ("film", 2))

    def test_all_stopwords_empty_table(self):
        table = token_frequencies(["the and of"], top_k=5)
        assert table.entries == ()

    def test_ties_alphabetical(self):
        table = token_frequencies(["bb aa", "aa bb"], top_k=2, stopwords=())
        assert table.entries == (("aa", 2), ("bb", 2))

    def test_strips_surrounding_punctuation_and_short_tokens(self):
        table = token_frequencies(['"film," film. I a'], top_k=5, stopwords=())
        assert table.entries == (("film", 2),)

    def test_top_k_truncates(self):
        table = token_frequencies(["aa bb cc dd"], top_k=2, stopwords=())
        assert len(table.entries) == 2

    def test_default_stopwords_are_function_words(self):
        assert "the" in DEFAULT_STOPWORDS
        table = token_frequencies(["the film the movie"], top_k=5)
        assert dict(table.entries) == {"film": 1, "movie": 1}

    def test_table_type_rejects_duplicates(self):
        with pytest.raises(ValueError):
            FrequencyTable(entries=(("a", 2), ("a", 1)), cohort="real")

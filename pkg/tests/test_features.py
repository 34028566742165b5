import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from floodwatch.corpus import Dataset, TweetRecord
from floodwatch.features import (
    FeatureError,
    FeatureFileError,
    FeatureMatrix,
    MissingFeaturesError,
    VocabularyError,
    align_features,
    bow_matrix,
    bow_vectorize,
    build_vocabulary,
    hash_embed,
    load_feature_file,
    load_vocabulary,
    save_feature_file,
    save_vocabulary,
    standardize_apply,
    standardize_fit,
)


class TestVocabulary:
    def test_all_tokens_kept_and_sorted(self):
        vocab = build_vocabulary([["a", "b"], ["b", "c"]], min_count=1)
        assert vocab.token_to_index == {"a": 0, "b": 1, "c": 2}

    def test_frequency_filter(self):
        vocab = build_vocabulary([["a", "b"], ["b", "c"]], min_count=2)
        assert vocab.token_to_index == {"b": 0}

    def test_empty_vocabulary_rejected(self):
        with pytest.raises(VocabularyError):
            build_vocabulary([[], []], min_count=1)

    def test_order_insensitive(self):
        docs = [["zona", "rossa"], ["fiume"], ["rossa", "allerta"]]
        assert build_vocabulary(docs, 1) == build_vocabulary(list(reversed(docs)), 1)

    def test_save_load_round_trip(self, tmp_path):
        vocab = build_vocabulary([["a", "b", "c"], ["b"]], min_count=1)
        save_vocabulary(vocab, tmp_path / "v.txt")
        assert load_vocabulary(tmp_path / "v.txt") == vocab

    def test_min_count_validated(self):
        with pytest.raises(ValueError):
            build_vocabulary([["a"]], min_count=0)


class TestBowVectorize:
    def test_counts(self):
        vocab = build_vocabulary([["alluvione", "strada"]], 1)
        vec = bow_vectorize(["alluvione", "strada", "alluvione"], vocab)
        assert vec.tolist() == [2.0, 1.0]

    def test_empty_doc(self):
        vocab = build_vocabulary([["a", "b", "c"]], 1)
        assert bow_vectorize([], vocab).tolist() == [0.0, 0.0, 0.0]

    def test_oov_ignored(self):
        vocab = build_vocabulary([["a"]], 1)
        assert bow_vectorize(["x"], vocab).tolist() == [0.0]

    @settings(max_examples=100)
    @given(
        doc=st.lists(st.sampled_from(["a", "b", "c", "x", "y"]), max_size=30),
    )
    def test_count_conservation(self, doc):
        vocab = build_vocabulary([["a", "b", "c"]], 1)
        vec = bow_vectorize(doc, vocab)
        in_vocab = sum(1 for t in doc if t in vocab)
        assert vec.sum() == in_vocab
        assert np.all(vec >= 0)


class TestFeatureFile:
    def test_readback(self, tmp_path):
        path = tmp_path / "f.tsv"
        path.write_text("#dim=2\na\t0.5 1.0\n", encoding="utf-8")
        fm = load_feature_file(path)
        assert fm.ids == ("a",)
        assert fm.dim == 2
        assert fm.rows.tolist() == [[0.5, 1.0]]

    def test_dimension_error_names_id(self, tmp_path):
        path = tmp_path / "f.tsv"
        path.write_text("#dim=2\na\t0.5 1.0\nb\t0.5\n", encoding="utf-8")
        with pytest.raises(FeatureFileError, match="'b'"):
            load_feature_file(path)

    def test_duplicate_id_rejected(self, tmp_path):
        path = tmp_path / "f.tsv"
        path.write_text("#dim=1\na\t0.5\na\t1.0\n", encoding="utf-8")
        with pytest.raises(FeatureFileError, match="duplicate"):
            load_feature_file(path)

    def test_missing_header_rejected(self, tmp_path):
        path = tmp_path / "f.tsv"
        path.write_text("a\t0.5\n", encoding="utf-8")
        with pytest.raises(FeatureFileError, match="dim"):
            load_feature_file(path)

    def test_comments_and_blank_lines_skipped(self, tmp_path):
        path = tmp_path / "f.tsv"
        path.write_text("#dim=1\n# encoder: test\n\na\t1e-3\n", encoding="utf-8")
        fm = load_feature_file(path)
        assert fm.rows[0, 0] == 1e-3

    def test_non_numeric_value_rejected(self, tmp_path):
        path = tmp_path / "f.tsv"
        path.write_text("#dim=1\na\tx\n", encoding="utf-8")
        with pytest.raises(FeatureFileError, match="'a'"):
            load_feature_file(path)

    def test_round_trip_at_nine_significant_digits(self, tmp_path):
        rng = np.random.default_rng(3)
        fm = FeatureMatrix(("a", "b", "c"), rng.normal(size=(3, 5)) * 10.0 ** rng.integers(-4, 4))
        path = tmp_path / "f.tsv"
        save_feature_file(fm, path)
        loaded = load_feature_file(path)
        assert loaded.ids == fm.ids
        np.testing.assert_allclose(loaded.rows, fm.rows, rtol=5e-9, atol=0)

    def test_unserializable_id_rejected(self, tmp_path):
        fm = FeatureMatrix(("a\tb",), np.zeros((1, 1)))
        with pytest.raises(FeatureFileError):
            save_feature_file(fm, tmp_path / "f.tsv")


class TestHashEmbed:
    def test_empty_doc_gives_zero_vector(self):
        assert hash_embed([], 16).tolist() == [0.0] * 16

    def test_deterministic(self):
        doc = ["alluvione", "fiume", "alluvione"]
        np.testing.assert_array_equal(hash_embed(doc, 32, seed=5), hash_embed(doc, 32, seed=5))

    def test_unit_norm_when_nonzero(self):
        vec = hash_embed(["a", "b", "c", "d"], 8, seed=1)
        assert abs(np.linalg.norm(vec) - 1.0) < 1e-9

    def test_seed_changes_embedding(self):
        doc = ["a", "b", "c"]
        assert not np.array_equal(hash_embed(doc, 64, 0), hash_embed(doc, 64, 1))

    def test_dim_validated(self):
        with pytest.raises(ValueError):
            hash_embed(["a"], 0)


def make_ds(*ids):
    return Dataset(tuple(TweetRecord(i, "x") for i in ids))


class TestAlignFeatures:
    def test_permutation(self):
        fm = FeatureMatrix(("a", "b"), np.array([[1.0], [2.0]]))
        aligned = align_features(make_ds("b", "a"), fm)
        assert aligned.ids == ("b", "a")
        assert aligned.rows.tolist() == [[2.0], [1.0]]

    def test_missing_id_listed(self):
        fm = FeatureMatrix(("a", "b"), np.zeros((2, 1)))
        with pytest.raises(MissingFeaturesError, match="'c'"):
            align_features(make_ds("a", "c"), fm)

    def test_identity(self):
        fm = FeatureMatrix(("a", "b"), np.array([[1.0], [2.0]]))
        aligned = align_features(make_ds("a", "b"), fm)
        assert aligned.rows.tolist() == fm.rows.tolist()


class TestFeatureMatrix:
    def test_duplicate_ids_rejected(self):
        with pytest.raises(FeatureError, match="duplicate"):
            FeatureMatrix(("a", "a"), np.zeros((2, 1)))

    def test_non_finite_rejected(self):
        with pytest.raises(FeatureError, match="finite"):
            FeatureMatrix(("a",), np.array([[np.nan]]))

    def test_rows_are_read_only(self):
        fm = FeatureMatrix(("a",), np.zeros((1, 2)))
        with pytest.raises(ValueError):
            fm.rows[0, 0] = 1.0

    def test_length_mismatch_rejected(self):
        with pytest.raises(FeatureError):
            FeatureMatrix(("a",), np.zeros((2, 1)))


def test_bow_matrix_builds_aligned_rows():
    vocab = build_vocabulary([["a", "b"]], 1)
    fm = bow_matrix([["a"], ["b", "b"]], ["r1", "r2"], vocab)
    assert fm.ids == ("r1", "r2")
    assert fm.rows.tolist() == [[1.0, 0.0], [0.0, 2.0]]


def test_standardize_round_trip():
    rng = np.random.default_rng(0)
    rows = rng.normal(loc=3.0, scale=2.0, size=(50, 4))
    stats = standardize_fit(rows)
    scaled = standardize_apply(rows, stats)
    np.testing.assert_allclose(scaled.mean(axis=0), 0.0, atol=1e-12)
    np.testing.assert_allclose(scaled.std(axis=0), 1.0, atol=1e-12)


def test_standardize_constant_dimension_safe():
    rows = np.ones((5, 2))
    scaled = standardize_apply(rows, standardize_fit(rows))
    assert np.all(np.isfinite(scaled))

from fractions import Fraction

import pytest

from floodwatch.corpus import (
    Dataset,
    DatasetError,
    ParseError,
    TweetRecord,
    ValidationError,
    dev_count,
    load_dataset,
    save_dataset,
    stratified_split,
)

from oracles import round_half_up_count


def write(path, text):
    path.write_text(text, encoding="utf-8")
    return path


class TestJsonLines:
    def test_two_line_readback(self, tmp_path):
        path = write(
            tmp_path / "d.jsonl",
            '{"id": "a", "text": "piove", "label": 1}\n'
            '{"id": "b", "text": "sole", "label": 0}\n',
        )
        ds = load_dataset(path)
        assert len(ds) == 2
        assert ds.ids() == ["a", "b"]
        assert ds.positive_count == 1
        assert ds.negative_count == 1

    def test_duplicate_id_names_the_id(self, tmp_path):
        path = write(
            tmp_path / "d.jsonl",
            '{"id": "a", "text": "x"}\n{"id": "b", "text": "y"}\n{"id": "a", "text": "z"}\n',
        )
        with pytest.raises(ValidationError, match="'a'"):
            load_dataset(path)

    def test_absent_label_loads_as_none(self, tmp_path):
        path = write(tmp_path / "d.jsonl", '{"id": "a", "text": "x"}\n')
        ds = load_dataset(path)
        assert ds.records[0].label is None
        assert ds.positive_count == 0
        assert ds.negative_count == 0

    def test_missing_id_names_line(self, tmp_path):
        path = write(tmp_path / "d.jsonl", '{"id": "a", "text": "x"}\n{"text": "y"}\n')
        with pytest.raises(ParseError, match="line 2"):
            load_dataset(path)

    def test_missing_text_names_line(self, tmp_path):
        path = write(tmp_path / "d.jsonl", '{"id": "a"}\n')
        with pytest.raises(ParseError, match="line 1"):
            load_dataset(path)

    def test_invalid_json_names_line(self, tmp_path):
        path = write(tmp_path / "d.jsonl", '{"id": "a", "text": "x"}\nnot json\n')
        with pytest.raises(ParseError, match="line 2"):
            load_dataset(path)

    def test_bad_label_rejected(self, tmp_path):
        path = write(tmp_path / "d.jsonl", '{"id": "a", "text": "x", "label": 2}\n')
        with pytest.raises(ParseError, match="label"):
            load_dataset(path)

    def test_unknown_keys_ignored(self, tmp_path):
        path = write(
            tmp_path / "d.jsonl",
            '{"id": "a", "text": "x", "lang": "it", "retweets": 3}\n',
        )
        assert len(load_dataset(path)) == 1

    def test_images_parsed_in_order(self, tmp_path):
        path = write(
            tmp_path / "d.jsonl", '{"id": "a", "text": "x", "images": ["p/1.jpg", "p/2.jpg"]}\n'
        )
        assert load_dataset(path).records[0].image_refs == ("p/1.jpg", "p/2.jpg")


class TestCsv:
    def test_readback(self, tmp_path):
        path = write(
            tmp_path / "d.csv",
            "id,text,images,label\na,piove forte,img/a.jpg;img/b.jpg,1\nb,sole,,\n",
        )
        ds = load_dataset(path)
        assert ds.records[0].image_refs == ("img/a.jpg", "img/b.jpg")
        assert ds.records[0].label == 1
        assert ds.records[1].image_refs == ()
        assert ds.records[1].label is None

    def test_crlf_accepted(self, tmp_path):
        path = tmp_path / "d.csv"
        path.write_bytes(b"id,text,images,label\r\na,piove,,1\r\n")
        assert load_dataset(path).records[0].label == 1

    def test_wrong_header_rejected(self, tmp_path):
        path = write(tmp_path / "d.csv", "id,body,images,label\na,x,,1\n")
        with pytest.raises(ParseError, match="header"):
            load_dataset(path)

    def test_empty_text_cell_rejected(self, tmp_path):
        path = write(tmp_path / "d.csv", "id,text,images,label\na,,,1\n")
        with pytest.raises(ParseError, match="line 2"):
            load_dataset(path)

    def test_bad_label_names_line(self, tmp_path):
        path = write(tmp_path / "d.csv", "id,text,images,label\na,x,,si\n")
        with pytest.raises(ParseError, match="line 2"):
            load_dataset(path)


@pytest.mark.parametrize("fmt,suffix", [("jsonlines", ".jsonl"), ("csv", ".csv")])
def test_save_load_round_trip(tmp_path, fmt, suffix):
    ds = Dataset(
        (
            TweetRecord("a", "piove, forte! è #grave", ("img/a.jpg",), 1),
            TweetRecord("b", "tutto ok", (), 0),
            TweetRecord("c", "senza etichetta", ("x.jpg", "y.jpg"), None),
        )
    )
    path = tmp_path / f"ds{suffix}"
    save_dataset(ds, path, fmt)
    assert load_dataset(path, fmt).records == ds.records


def test_save_load_twice_is_byte_identical(tmp_path):
    ds = Dataset((TweetRecord("a", "x", (), 1), TweetRecord("b", "y", (), 0)))
    p1, p2 = tmp_path / "a.jsonl", tmp_path / "b.jsonl"
    save_dataset(ds, p1)
    save_dataset(load_dataset(p1), p2)
    assert p1.read_bytes() == p2.read_bytes()


def test_format_inference_failure(tmp_path):
    path = write(tmp_path / "data.xyz", "{}")
    with pytest.raises(DatasetError, match="format"):
        load_dataset(path)


def make_labeled(n_pos, n_neg):
    records = [TweetRecord(f"p{i}", "x", (), 1) for i in range(n_pos)]
    records += [TweetRecord(f"n{i}", "x", (), 0) for i in range(n_neg)]
    return Dataset(tuple(records))


class TestStratifiedSplit:
    def test_exact_halves(self):
        train, dev = stratified_split(make_labeled(6, 4), 0.5, seed=0)
        assert dev.positive_count == 3 and dev.negative_count == 2
        assert train.positive_count == 3 and train.negative_count == 2

    def test_rounding_with_minimum(self):
        # 7 * 0.2 = 1.4 rounds to 1; 3 * 0.2 = 0.6 rounds to 1
        train, dev = stratified_split(make_labeled(7, 3), 0.2, seed=0)
        assert dev.positive_count == 1 and dev.negative_count == 1
        assert train.positive_count == 6 and train.negative_count == 2

    def test_same_seed_same_membership(self):
        ds = make_labeled(20, 10)
        _, dev1 = stratified_split(ds, 0.3, seed=42)
        _, dev2 = stratified_split(ds, 0.3, seed=42)
        assert dev1.ids() == dev2.ids()

    def test_different_seeds_differ(self):
        ds = make_labeled(50, 50)
        _, dev1 = stratified_split(ds, 0.3, seed=1)
        _, dev2 = stratified_split(ds, 0.3, seed=2)
        assert set(dev1.ids()) != set(dev2.ids())

    def test_membership_depends_only_on_ids_and_seed(self):
        ds = make_labeled(9, 5)
        reversed_ds = Dataset(tuple(reversed(ds.records)))
        _, dev1 = stratified_split(ds, 0.4, seed=3)
        _, dev2 = stratified_split(reversed_ds, 0.4, seed=3)
        assert set(dev1.ids()) == set(dev2.ids())

    def test_partition_is_disjoint_and_complete(self):
        ds = make_labeled(13, 8)
        train, dev = stratified_split(ds, 0.25, seed=5)
        assert len(train) + len(dev) == len(ds)
        assert set(train.ids()).isdisjoint(dev.ids())
        assert set(train.ids()) | set(dev.ids()) == set(ds.ids())

    def test_unlabeled_records_rejected(self):
        ds = Dataset(
            (
                TweetRecord("a", "x", (), 1),
                TweetRecord("b", "x", (), 1),
                TweetRecord("c", "x", (), None),
            )
        )
        with pytest.raises(ValidationError, match="label"):
            stratified_split(ds, 0.5, seed=0)

    def test_tiny_class_rejected(self):
        ds = Dataset((TweetRecord("a", "x", (), 1), TweetRecord("b", "x", (), 0),
                      TweetRecord("c", "x", (), 0)))
        with pytest.raises(ValidationError, match="at least 2"):
            stratified_split(ds, 0.5, seed=0)

    @pytest.mark.parametrize("fraction", [0.0, 1.0, -0.1, 1.5])
    def test_fraction_out_of_range(self, fraction):
        with pytest.raises(ValueError):
            stratified_split(make_labeled(3, 3), fraction, seed=0)


def test_dev_count_matches_integer_oracle_exhaustively():
    fractions = [0.1, 0.2, 0.25, 1 / 3, 0.4, 0.5, 0.6, 2 / 3, 0.75, 0.8, 0.9]
    for fraction in fractions:
        exact = Fraction(fraction)
        for n in range(1, 1001):
            assert dev_count(n, fraction) == round_half_up_count(n, exact), (n, fraction)


def test_split_counts_match_dev_count_rule():
    for n_pos, n_neg, fraction in [(7, 3, 0.2), (11, 6, 1 / 3), (100, 40, 0.15), (5, 9, 0.5)]:
        _, dev = stratified_split(make_labeled(n_pos, n_neg), fraction, seed=9)
        assert dev.positive_count == dev_count(n_pos, fraction)
        assert dev.negative_count == dev_count(n_neg, fraction)


def test_record_validation():
    with pytest.raises(ValidationError):
        TweetRecord("", "x")
    with pytest.raises(ValidationError):
        TweetRecord("a", "x", (), 2)
    with pytest.raises(ValidationError):
        Dataset((TweetRecord("a", "x"), TweetRecord("a", "y")))

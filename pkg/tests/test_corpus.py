"""Dataset loading, validation, and author-level splitting."""

import json

import numpy as np
import pytest

from authprof import (
    Author,
    LabeledDataset,
    ValidationError,
    load_dataset,
    stratified_kfold,
    subsample_users,
    write_dataset,
)


def write_jsonl(path, records, header=None):
    with open(path, "w", encoding="utf-8") as fh:
        if header is not None:
            fh.write(json.dumps(header) + "\n")
        for record in records:
            fh.write(json.dumps(record) + "\n")


def small_dataset(tmp_path, name="data.jsonl"):
    path = tmp_path / name
    write_jsonl(
        path,
        [
            {"author_id": "u1", "label": "bot", "texts": ["beep boop", "01010"]},
            {"author_id": "u2", "label": "human", "texts": ["hello there"]},
        ],
    )
    return path


class TestLoadDataset:
    def test_reads_authors_and_label_order(self, tmp_path):
        ds = load_dataset(small_dataset(tmp_path))
        assert len(ds.authors) == 2
        assert ds.label_set == ["bot", "human"]
        assert ds.authors[0].texts == ["beep boop", "01010"]

    def test_header_fixes_label_order(self, tmp_path):
        path = tmp_path / "data.jsonl"
        write_jsonl(
            path,
            [
                {"author_id": "u1", "label": "bot", "texts": ["x"]},
                {"author_id": "u2", "label": "human", "texts": ["y"]},
            ],
            header={"label_set": ["human", "bot"]},
        )
        ds = load_dataset(path)
        assert ds.label_set == ["human", "bot"]

    def test_duplicate_id_is_an_error(self, tmp_path):
        path = tmp_path / "dup.jsonl"
        write_jsonl(
            path,
            [
                {"author_id": "u1", "label": "a", "texts": ["x"]},
                {"author_id": "u1", "label": "a", "texts": ["y"]},
            ],
        )
        with pytest.raises(ValidationError, match="u1"):
            load_dataset(path)

    def test_zero_usable_texts_is_an_error(self, tmp_path):
        path = tmp_path / "empty.jsonl"
        write_jsonl(path, [{"author_id": "u1", "label": "a", "texts": ["", "  "]}])
        with pytest.raises(ValidationError, match="zero usable texts"):
            load_dataset(path)

    def test_whitespace_texts_dropped_with_count(self, tmp_path):
        path = tmp_path / "ws.jsonl"
        write_jsonl(path, [{"author_id": "u1", "label": "a", "texts": ["ok", " ", ""]}])
        ds = load_dataset(path)
        assert ds.authors[0].texts == ["ok"]
        assert ds.dropped_texts == 2

    def test_malformed_line_reports_line_number(self, tmp_path):
        path = tmp_path / "bad.jsonl"
        path.write_text('{"author_id": "u1", "label": "a", "texts": ["x"]}\nnot json\n')
        with pytest.raises(ValidationError, match="line 2"):
            load_dataset(path)

    def test_unknown_label_against_header(self, tmp_path):
        path = tmp_path / "bad_label.jsonl"
        write_jsonl(
            path,
            [{"author_id": "u1", "label": "alien", "texts": ["x"]}],
            header={"label_set": ["bot", "human"]},
        )
        with pytest.raises(ValidationError, match="alien"):
            load_dataset(path)

    def test_unsupported_format(self, tmp_path):
        with pytest.raises(ValidationError, match="format"):
            load_dataset(small_dataset(tmp_path), fmt="xml")


class TestRoundTrip:
    def test_write_then_load_is_record_equivalent(self, tmp_path):
        ds = load_dataset(small_dataset(tmp_path))
        out = tmp_path / "out.jsonl"
        write_dataset(ds, out)
        again = load_dataset(out)
        assert again.label_set == ds.label_set
        assert [(a.id, a.label, a.texts) for a in again.authors] == [
            (a.id, a.label, a.texts) for a in ds.authors
        ]


def make_dataset(counts: dict, texts_per_author=2):
    authors = []
    for label, n in counts.items():
        for i in range(n):
            authors.append(
                Author(id=f"{label}{i}", texts=[f"text {label} {i} {j}" for j in range(texts_per_author)], label=label)
            )
    return LabeledDataset(authors=authors, label_set=list(counts))


class TestStratifiedKFold:
    def test_exact_division(self):
        ds = make_dataset({"a": 5, "b": 5})
        folds = stratified_kfold(ds, k=5, seed=0)
        assert len(folds) == 5
        for fold in folds:
            test_labels = [ds.by_id()[i].label for i in fold.test_ids]
            assert sorted(test_labels) == ["a", "b"]

    def test_determinism(self):
        ds = make_dataset({"a": 7, "b": 9})
        first = stratified_kfold(ds, k=3, seed=42)
        second = stratified_kfold(ds, k=3, seed=42)
        assert [(f.train_ids, f.test_ids) for f in first] == [
            (f.train_ids, f.test_ids) for f in second
        ]

    def test_small_class_is_an_error(self):
        ds = make_dataset({"a": 3, "b": 10})
        with pytest.raises(ValidationError, match="'a'"):
            stratified_kfold(ds, k=5, seed=0)

    def test_k_below_two(self):
        ds = make_dataset({"a": 5, "b": 5})
        with pytest.raises(ValidationError):
            stratified_kfold(ds, k=1, seed=0)

    def test_test_sides_partition_the_authors(self):
        rng = np.random.default_rng(7)
        for trial in range(20):
            counts = {f"c{j}": int(rng.integers(4, 15)) for j in range(int(rng.integers(2, 5)))}
            k = int(rng.integers(2, 1 + min(counts.values())))
            ds = make_dataset(counts)
            folds = stratified_kfold(ds, k=k, seed=trial)
            collected = [i for f in folds for i in f.test_ids]
            assert sorted(collected) == sorted(a.id for a in ds.authors)
            for fold in folds:
                assert not set(fold.train_ids) & set(fold.test_ids)
                assert sorted(fold.train_ids + fold.test_ids) == sorted(a.id for a in ds.authors)

    def test_per_class_counts_are_floor_or_ceil(self):
        rng = np.random.default_rng(11)
        for trial in range(20):
            counts = {f"c{j}": int(rng.integers(5, 20)) for j in range(3)}
            k = int(rng.integers(2, 6))
            if min(counts.values()) < k:
                continue
            ds = make_dataset(counts)
            by_id = ds.by_id()
            for fold in stratified_kfold(ds, k=k, seed=trial):
                for label, n_c in counts.items():
                    got = sum(1 for i in fold.test_ids if by_id[i].label == label)
                    assert got in (n_c // k, -(-n_c // k))


class TestSubsampleUsers:
    def test_two_class_counts(self):
        ds = make_dataset({"a": 100, "b": 100})
        sub = subsample_users(ds, n_per_label=8, seed=0)
        assert len(sub.authors) == 16
        assert sub.label_set == ds.label_set

    def test_shortfall_is_not_fatal(self):
        # Class sizes shaped like a small-class age task: 58/60/22/12.
        ds = make_dataset({"18-24": 58, "25-34": 60, "35-49": 22, "50+": 12})
        sub = subsample_users(ds, n_per_label=50, seed=0)
        assert len(sub.authors) == 50 + 50 + 22 + 12

    def test_determinism(self):
        ds = make_dataset({"a": 30, "b": 30})
        ids1 = {a.id for a in subsample_users(ds, 5, seed=3).authors}
        ids2 = {a.id for a in subsample_users(ds, 5, seed=3).authors}
        assert ids1 == ids2

    def test_invalid_n(self):
        ds = make_dataset({"a": 5, "b": 5})
        with pytest.raises(ValidationError):
            subsample_users(ds, 0, seed=0)

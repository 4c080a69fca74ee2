"""Hypothesis sets, pair generation, and the pair-score adapter."""

import json

import numpy as np
import pytest

from authprof import (
    Author,
    CONTRADICTED,
    ENTAILED,
    HypothesisSet,
    ValidationError,
    generate_pairs,
    identity_hypotheses,
    load_hypotheses,
    load_hypothesis_sets,
    load_pair_scores,
)


class TestLoadHypotheses:
    def test_full_mapping(self, tmp_path):
        path = tmp_path / "h.json"
        path.write_text(json.dumps({"female": "I'm a female", "male": "I'm a male"}))
        hset = load_hypotheses(path, ["female", "male"])
        assert [h.text for h in hset.hypotheses] == ["I'm a female", "I'm a male"]

    def test_empty_file_gives_identity_set(self, tmp_path):
        path = tmp_path / "h.json"
        path.write_text("{}")
        hset = load_hypotheses(path, ["bot", "human"])
        assert [h.text for h in hset.hypotheses] == ["bot", "human"]

    def test_partial_mapping_falls_back_to_identity(self, tmp_path):
        path = tmp_path / "h.json"
        path.write_text(json.dumps({"bot": "this is a machine"}))
        hset = load_hypotheses(path, ["bot", "human"])
        assert hset.text_for("bot") == "this is a machine"
        assert hset.text_for("human") == "human"

    def test_unknown_label_is_an_error(self, tmp_path):
        path = tmp_path / "h.json"
        path.write_text(json.dumps({"alien": "take me to your leader"}))
        with pytest.raises(ValidationError, match="alien"):
            load_hypotheses(path, ["bot", "human"])

    def test_empty_hypothesis_text(self, tmp_path):
        path = tmp_path / "h.json"
        path.write_text(json.dumps({"bot": "  "}))
        with pytest.raises(ValidationError, match="bot"):
            load_hypotheses(path, ["bot", "human"])

    def test_named_sets_array(self, tmp_path):
        path = tmp_path / "sets.json"
        path.write_text(
            json.dumps(
                [
                    {"name": "plain", "hypotheses": {"bot": "a machine", "human": "a person"}},
                    {"name": "firstperson", "hypotheses": {"bot": "I am a bot"}},
                ]
            )
        )
        sets = load_hypothesis_sets(path, ["bot", "human"])
        assert [s.name for s in sets] == ["plain", "firstperson"]
        assert sets[1].text_for("human") == "human"

    def test_identity_constructor(self):
        hset = identity_hypotheses(["a", "b"])
        assert hset.name == "identity"
        assert [h.text for h in hset.hypotheses] == ["a", "b"]


def hset_abc():
    return HypothesisSet.from_mapping(
        {"a": "alpha text", "b": "beta text", "c": "gamma text"}, ["a", "b", "c"]
    )


class TestGeneratePairs:
    def test_one_text_three_labels(self):
        pairs = generate_pairs([Author("u1", ["hello"], "a")], hset_abc())
        assert len(pairs) == 3
        assert sum(p.klass == ENTAILED for p in pairs) == 1
        assert sum(p.klass == CONTRADICTED for p in pairs) == 2
        entailed = next(p for p in pairs if p.klass == ENTAILED)
        assert entailed.hypothesis == "alpha text"

    def test_zero_texts_zero_pairs(self):
        assert generate_pairs([], hset_abc()) == []

    def test_counts_scale_with_texts_and_labels(self):
        hset = HypothesisSet.from_mapping({"x": "ex", "y": "why"}, ["x", "y"])
        authors = [Author("u1", ["t1", "t2", "t3"], "x"), Author("u2", ["t4", "t5"], "y")]
        pairs = generate_pairs(authors, hset)
        assert len(pairs) == 10
        assert sum(p.klass == ENTAILED for p in pairs) == 5

    def test_unlabeled_author_is_an_error(self):
        with pytest.raises(ValidationError, match="unlabeled"):
            generate_pairs([Author("u1", ["x"], None)], hset_abc())

    def test_partition_property_on_random_inputs(self):
        rng = np.random.default_rng(0)
        hset = hset_abc()
        for trial in range(30):
            authors = [
                Author(
                    f"u{i}",
                    [f"text {i} {j}" for j in range(int(rng.integers(1, 6)))],
                    ["a", "b", "c"][int(rng.integers(0, 3))],
                )
                for i in range(int(rng.integers(1, 6)))
            ]
            pairs = generate_pairs(authors, hset)
            n_texts = sum(len(a.texts) for a in authors)
            assert len(pairs) == n_texts * 3
            by_text = {}
            for p in pairs:
                by_text.setdefault((p.author_id, p.text_index), []).append(p.klass)
            for klasses in by_text.values():
                assert sorted(klasses) == [CONTRADICTED, CONTRADICTED, ENTAILED]

    def test_output_order_is_canonical(self):
        hset = hset_abc()
        authors = [Author("u2", ["t"], "b"), Author("u1", ["t"], "a")]
        forward = generate_pairs(authors, hset)
        backward = generate_pairs(list(reversed(authors)), hset)
        assert [(p.author_id, p.text_index, p.label, p.klass) for p in forward] == [
            (p.author_id, p.text_index, p.label, p.klass) for p in backward
        ]


class TestPairScores:
    def write(self, path, records):
        with open(path, "w", encoding="utf-8") as fh:
            for r in records:
                fh.write(json.dumps(r) + "\n")

    def test_full_table(self, tmp_path):
        path = tmp_path / "scores.jsonl"
        self.write(
            path,
            [
                {"author_id": "u1", "text_index": 0, "label": "a", "entail_prob": 0.9},
                {"author_id": "u1", "text_index": 0, "label": "b", "entail_prob": 0.2},
                {"author_id": "u1", "text_index": 1, "label": "a", "entail_prob": 0.1},
                {"author_id": "u1", "text_index": 1, "label": "b", "entail_prob": 0.7},
            ],
        )
        table = load_pair_scores(path)
        assert len(table) == 4
        assert table.prob("u1", 1, "b") == 0.7

    def test_probability_out_of_range(self, tmp_path):
        path = tmp_path / "scores.jsonl"
        self.write(path, [{"author_id": "u1", "text_index": 0, "label": "a", "entail_prob": 1.2}])
        with pytest.raises(ValidationError, match=r"\[0, 1\]"):
            load_pair_scores(path)

    def test_duplicate_triple(self, tmp_path):
        path = tmp_path / "scores.jsonl"
        self.write(
            path,
            [
                {"author_id": "u1", "text_index": 0, "label": "a", "entail_prob": 0.5},
                {"author_id": "u1", "text_index": 0, "label": "a", "entail_prob": 0.6},
            ],
        )
        with pytest.raises(ValidationError, match="duplicate"):
            load_pair_scores(path)

    def test_missing_triple_is_named_on_lookup(self, tmp_path):
        path = tmp_path / "scores.jsonl"
        self.write(path, [{"author_id": "u1", "text_index": 0, "label": "a", "entail_prob": 0.5}])
        table = load_pair_scores(path)
        with pytest.raises(ValidationError, match="u1.*1.*'b'"):
            table.prob("u1", 1, "b")

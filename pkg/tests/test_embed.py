"""Hashed TF-IDF encoder, embedding tables, and similarity."""

import json
import math

import numpy as np
import pytest

from authprof import (
    ValidationError,
    fit_encoder,
    is_degenerate,
    l2_normalize,
    load_embeddings,
    similarity,
)
from authprof.embed import char_ngrams, gram_bucket
from authprof.hashing import fnv1a_64


class TestHashingStability:
    def test_fnv1a_published_vector(self):
        # Published FNV-1a 64-bit value for the byte "a".
        assert fnv1a_64(b"a") == 0xAF63DC4C8601EC8C

    def test_gram_buckets_are_frozen(self):
        # Feature indices must never drift across processes or platforms.
        assert gram_bucket("a", 4096) == (1606, 1)
        assert gram_bucket("ab", 4096) == (3125, 1)
        assert gram_bucket("the", 4096) == (2750, 1)
        assert gram_bucket("ñé", 4096) == (514, -1)


class TestFitEncoder:
    def test_idf_when_every_doc_shares_grams(self):
        # df = 2 for every bucket of "ab", so idf = ln(3/3) + 1 = 1.
        enc = fit_encoder(["ab", "ab"])
        for gram in ["a", "b", "ab"]:
            bucket, _ = gram_bucket(gram, enc.hash_dim)
            assert enc.idf[bucket] == pytest.approx(1.0)

    def test_idf_single_document(self):
        enc = fit_encoder(["xyz"])
        for gram in char_ngrams("xyz", (1, 5)):
            bucket, _ = gram_bucket(gram, enc.hash_dim)
            assert enc.idf[bucket] == pytest.approx(1.0)

    def test_unseen_buckets_carry_weight_one_times_tf(self):
        enc = fit_encoder(["ab"])
        untouched = set(range(enc.hash_dim)) - {
            gram_bucket(g, enc.hash_dim)[0] for g in char_ngrams("ab", (1, 5))
        }
        j = untouched.pop()
        assert enc.idf[j] == pytest.approx(math.log(2.0) + 1.0)
        assert enc.idf.min() >= 1.0

    def test_fit_is_bitwise_deterministic(self):
        corpus = ["the cat", "a dog", "more text here"]
        a = fit_encoder(corpus)
        b = fit_encoder(corpus)
        assert np.array_equal(a.idf, b.idf)

    def test_empty_corpus(self):
        with pytest.raises(ValidationError):
            fit_encoder([])

    def test_hash_dim_must_be_power_of_two(self):
        with pytest.raises(ValidationError):
            fit_encoder(["x"], hash_dim=1000)


class TestEmbedText:
    def test_unit_norm(self):
        enc = fit_encoder(["hello world", "other text"])
        v = enc.embed("hello world")
        assert np.linalg.norm(v) == pytest.approx(1.0, abs=1e-6)

    def test_deterministic(self):
        enc = fit_encoder(["hello world"])
        assert np.array_equal(enc.embed("hello"), enc.embed("hello"))

    def test_empty_text_is_degenerate(self):
        enc = fit_encoder(["hello"])
        v = enc.embed("")
        assert is_degenerate(v)
        assert np.all(v == 0.0)

    def test_disjoint_charsets_are_orthogonal_when_collision_free(self):
        # The oracle enumerates both texts' bucket sets first and only
        # asserts orthogonality when hashing kept them disjoint.
        enc = fit_encoder(["abc", "xyz"])
        buckets_a = {gram_bucket(g, enc.hash_dim)[0] for g in char_ngrams("abc", enc.n_range)}
        buckets_b = {gram_bucket(g, enc.hash_dim)[0] for g in char_ngrams("xyz", enc.n_range)}
        assert not buckets_a & buckets_b, "hash collision; pick different probe texts"
        assert similarity(enc.embed("abc"), enc.embed("xyz")) == pytest.approx(0.0)

    def test_lowercase_folding(self):
        enc = fit_encoder(["Hello"])
        assert np.array_equal(enc.embed("HELLO"), enc.embed("hello"))


class TestSimilarity:
    def test_identical_unit_vectors(self):
        assert similarity(np.array([1.0, 0.0]), np.array([1.0, 0.0])) == 1.0

    def test_orthogonal(self):
        assert similarity(np.array([1.0, 0.0]), np.array([0.0, 1.0])) == 0.0

    def test_plain_dot_product(self):
        assert similarity(np.array([0.6, 0.8]), np.array([0.8, 0.6])) == pytest.approx(0.96)

    def test_dimension_mismatch(self):
        with pytest.raises(ValidationError):
            similarity(np.ones(3), np.ones(4))

    def test_cauchy_schwarz_on_random_vectors(self):
        rng = np.random.default_rng(0)
        for _ in range(200):
            u = rng.normal(size=8)
            v = rng.normal(size=8)
            assert abs(similarity(u, v)) <= np.linalg.norm(u) * np.linalg.norm(v) + 1e-12


class TestNormalization:
    def test_idempotent_exactly(self):
        rng = np.random.default_rng(1)
        for _ in range(50):
            v = rng.normal(size=16)
            once = l2_normalize(v)
            assert np.array_equal(l2_normalize(once), once)

    def test_zero_vector_passes_through(self):
        z = np.zeros(4)
        assert np.array_equal(l2_normalize(z), z)


class TestEmbeddingTable:
    def write(self, path, records, header=None):
        with open(path, "w", encoding="utf-8") as fh:
            if header is not None:
                fh.write(json.dumps(header) + "\n")
            for r in records:
                fh.write(json.dumps(r) + "\n")

    def test_read_back(self, tmp_path):
        path = tmp_path / "emb.jsonl"
        self.write(
            path,
            [
                {"author_id": "u1", "text_index": 0, "vector": [1, 0, 0, 0]},
                {"author_id": "u1", "text_index": 1, "vector": [0, 2, 0, 0]},
                {"author_id": "u2", "text_index": 0, "vector": [0, 0, 3, 0]},
            ],
        )
        table = load_embeddings(path)
        assert len(table) == 3 and table.dim == 4
        # normalized on load by default
        assert np.linalg.norm(table.vector("u1", 1)) == pytest.approx(1.0)

    def test_prenormalized_header_skips_normalization(self, tmp_path):
        path = tmp_path / "emb.jsonl"
        self.write(
            path,
            [{"author_id": "u1", "text_index": 0, "vector": [0.0, 2.0]}],
            header={"dim": 2, "normalized": True},
        )
        assert load_embeddings(path).vector("u1", 0)[1] == 2.0

    def test_dim_mismatch_names_record(self, tmp_path):
        path = tmp_path / "emb.jsonl"
        self.write(
            path,
            [
                {"author_id": "u1", "text_index": 0, "vector": [1, 0, 0, 0]},
                {"author_id": "u2", "text_index": 0, "vector": [1, 0, 0, 0, 0]},
            ],
        )
        with pytest.raises(ValidationError, match="u2"):
            load_embeddings(path)

    def test_duplicate_key(self, tmp_path):
        path = tmp_path / "emb.jsonl"
        self.write(
            path,
            [
                {"author_id": "u1", "text_index": 0, "vector": [1, 0]},
                {"author_id": "u1", "text_index": 0, "vector": [0, 1]},
            ],
        )
        with pytest.raises(ValidationError, match="duplicate"):
            load_embeddings(path)

    def test_absent_lookup_is_an_error(self, tmp_path):
        path = tmp_path / "emb.jsonl"
        self.write(path, [{"author_id": "u1", "text_index": 0, "vector": [1, 0]}])
        table = load_embeddings(path)
        with pytest.raises(ValidationError, match="u9"):
            table.vector("u9", 0)

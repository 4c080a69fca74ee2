"""Text-to-vector encoding.

Two sources of vectors share one contract (dense float64 arrays,
L2-normalized unless degenerate):

* :class:`HashedTfidfEncoder` — a deterministic character n-gram TF-IDF
  encoder with signed feature hashing.  It stands in for the pretrained
  sentence encoders used by the full-scale systems.
* :class:`EmbeddingTable` — externally computed vectors loaded from a
  JSONL file, keyed by ``(author_id, text_index)``.

Zero vectors (texts that yield no n-grams) are kept as zero and treated
as degenerate rather than raising mid-pipeline.
"""

from __future__ import annotations

import json
import logging
from collections import Counter
from dataclasses import dataclass, field

import numpy as np

from .errors import ValidationError
from .hashing import gram_hash

logger = logging.getLogger(__name__)

# author_id used for hypothesis vectors in embedding files; text_index is
# the label's position in label_set.
HYPOTHESIS_AUTHOR_ID = "__hypothesis__"


def l2_normalize(v: np.ndarray) -> np.ndarray:
    """Return v scaled to unit L2 norm; zero vectors pass through unchanged."""
    v = np.asarray(v, dtype=np.float64)
    norm = float(np.linalg.norm(v))
    if norm == 0.0:
        return v.copy()
    return v / norm


def is_degenerate(v: np.ndarray) -> bool:
    """True for the all-zero vector (no n-grams, or a zero projection)."""
    return float(np.linalg.norm(v)) == 0.0


def similarity(u: np.ndarray, v: np.ndarray) -> float:
    """Dot product of two vectors; cosine similarity for normalized inputs."""
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    if u.shape != v.shape:
        raise ValidationError(f"dimension mismatch: {u.shape} vs {v.shape}")
    return float(np.dot(u, v))


def char_ngrams(text: str, n_range: tuple[int, int], lowercase: bool = True):
    """Yield all contiguous character n-grams with n in ``n_range`` (inclusive)."""
    if lowercase:
        text = text.lower()
    lo, hi = n_range
    length = len(text)
    for n in range(lo, hi + 1):
        for i in range(length - n + 1):
            yield text[i : i + n]


def gram_bucket(gram: str, hash_dim: int) -> tuple[int, int]:
    """Map an n-gram to a (bucket, sign) pair.

    Bit 0 of the FNV-1a hash picks the sign, the remaining bits pick the
    bucket.  Signed hashing keeps collisions approximately unbiased.
    """
    h = gram_hash(gram)
    sign = 1 if (h & 1) == 0 else -1
    return (h >> 1) % hash_dim, sign


@dataclass
class HashedTfidfEncoder:
    """Character n-gram TF-IDF encoder over a fixed-size hashed feature space.

    ``idf[j] = ln((1 + doc_count) / (1 + df[j])) + 1`` (smooth idf), so
    buckets never seen during fitting still carry weight 1.
    """

    n_range: tuple[int, int] = (1, 5)
    hash_dim: int = 4096
    lowercase: bool = True
    idf: np.ndarray = field(default=None, repr=False)
    doc_count: int = 0

    @property
    def dim(self) -> int:
        return self.hash_dim

    def embed(self, text: str) -> np.ndarray:
        """TF-IDF vector of ``text``: signed hashed tf, times idf, L2-normalized."""
        v = np.zeros(self.hash_dim, dtype=np.float64)
        counts = Counter(char_ngrams(text, self.n_range, self.lowercase))
        for gram, count in counts.items():
            bucket, sign = gram_bucket(gram, self.hash_dim)
            v[bucket] += sign * count
        v *= self.idf
        return l2_normalize(v)


def fit_encoder(
    texts,
    n_range: tuple[int, int] = (1, 5),
    hash_dim: int = 4096,
    lowercase: bool = True,
) -> HashedTfidfEncoder:
    """Fit document frequencies over ``texts`` and return the encoder.

    Deterministic: feature indices come from a fixed published hash
    constant, not a per-process salt.
    """
    texts = list(texts)
    if not texts:
        raise ValidationError("cannot fit encoder on an empty corpus")
    if hash_dim < 1 or (hash_dim & (hash_dim - 1)) != 0:
        raise ValidationError(f"hash_dim must be a power of two, got {hash_dim}")
    lo, hi = n_range
    if lo < 1 or hi < lo:
        raise ValidationError(f"invalid n_range {n_range}")

    df = np.zeros(hash_dim, dtype=np.float64)
    for text in texts:
        buckets = {gram_bucket(g, hash_dim)[0] for g in char_ngrams(text, n_range, lowercase)}
        for b in buckets:
            df[b] += 1.0
    n_docs = len(texts)
    idf = np.log((1.0 + n_docs) / (1.0 + df)) + 1.0
    return HashedTfidfEncoder(
        n_range=(lo, hi), hash_dim=hash_dim, lowercase=lowercase, idf=idf, doc_count=n_docs
    )


def embed_text(encoder: HashedTfidfEncoder, text: str) -> np.ndarray:
    """Functional alias for :meth:`HashedTfidfEncoder.embed`."""
    return encoder.embed(text)


@dataclass
class EmbeddingTable:
    """Externally computed vectors keyed by ``(author_id, text_index)``."""

    dim: int
    vectors: dict = field(default_factory=dict, repr=False)

    def __len__(self) -> int:
        return len(self.vectors)

    def __contains__(self, key) -> bool:
        return key in self.vectors

    def vector(self, author_id: str, text_index: int) -> np.ndarray:
        key = (author_id, text_index)
        if key not in self.vectors:
            raise ValidationError(f"no embedding for (author_id={author_id!r}, text_index={text_index})")
        return self.vectors[key]

    def hypothesis_vector(self, label_position: int) -> np.ndarray:
        return self.vector(HYPOTHESIS_AUTHOR_ID, label_position)


def load_embeddings(path) -> EmbeddingTable:
    """Load an embedding JSONL file into an :class:`EmbeddingTable`.

    Optional first-line header ``{"dim": D, "normalized": true|false}``;
    vectors are L2-normalized on load unless the header marks them as
    already normalized.
    """
    dim = None
    normalized = False
    vectors: dict = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ValidationError(f"{path}: malformed JSON on line {lineno}: {exc}") from exc
            if lineno == 1 and "vector" not in record:
                if "dim" in record:
                    dim = int(record["dim"])
                normalized = bool(record.get("normalized", False))
                continue
            try:
                author_id = record["author_id"]
                text_index = int(record["text_index"])
                vec = np.asarray(record["vector"], dtype=np.float64)
            except (KeyError, TypeError, ValueError) as exc:
                raise ValidationError(f"{path}: bad embedding record on line {lineno}: {exc}") from exc
            if dim is None:
                dim = vec.shape[0]
            if vec.shape != (dim,):
                raise ValidationError(
                    f"{path}: line {lineno} (author_id={author_id!r}, text_index={text_index}) "
                    f"has dim {vec.shape[0]}, expected {dim}"
                )
            key = (author_id, text_index)
            if key in vectors:
                raise ValidationError(f"{path}: duplicate embedding for {key} on line {lineno}")
            vectors[key] = vec if normalized else l2_normalize(vec)
    if dim is None:
        raise ValidationError(f"{path}: no embedding records found")
    return EmbeddingTable(dim=dim, vectors=vectors)

"""Per-author training-instance selection.

Random baselines pick 1 or k texts per author.  The clustering method
agglomerates the author's text embeddings bottom-up under cosine
distance (average linkage) until the closest pair of clusters is
farther apart than the threshold, then keeps the text closest to each
cluster centroid.  The number of selected texts is therefore dynamic
per author.

Cosine distance lives in [0, 2], but vectors with non-negative entries
(such as the built-in TF-IDF encoder's) never exceed distance 1.0, so
with that encoder the default threshold 1.5 collapses every author to a
single cluster.  Use a threshold around 0.5 for non-negative embeddings;
1.5 is meaningful for signed embedding spaces.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .corpus import Author
from .embed import l2_normalize
from .errors import ValidationError
from .hashing import derive_seed


@dataclass
class SelectionConfig:
    method: str = "random"  # "random" or "cluster"
    k: int = 1
    threshold: float = 1.5
    linkage: str = "average"
    seed: int = 0

    def __post_init__(self):
        if self.method not in ("random", "cluster"):
            raise ValidationError(f"unknown selection method {self.method!r}")
        if self.method == "random" and self.k < 1:
            raise ValidationError(f"k must be >= 1, got {self.k}")
        if self.threshold <= 0:
            raise ValidationError(f"threshold must be > 0, got {self.threshold}")
        if self.linkage != "average":
            raise ValidationError(f"only average linkage is supported, got {self.linkage!r}")


@dataclass
class ClusterResult:
    """A partition of text indices with centroids and representatives.

    clusters[i] lists member indices (ascending); centroids[i] is the
    arithmetic mean of the members' vectors; representatives[i] is the
    member closest to centroids[i] in cosine distance (ties go to the
    lowest index).
    """

    clusters: list[list[int]]
    centroids: list[np.ndarray] = field(repr=False, default_factory=list)
    representatives: list[int] = field(default_factory=list)


def cosine_distance(u: np.ndarray, v: np.ndarray) -> float:
    """1 - cosine similarity; degenerate (zero) vectors get distance 1."""
    return 1.0 - float(np.dot(l2_normalize(u), l2_normalize(v)))


def select_random(author: Author, k: int, seed: int) -> list[int]:
    """min(k, n_texts) distinct text indices, uniform without replacement.

    Deterministic per (seed, author id); returned sorted ascending.
    """
    if k < 1:
        raise ValidationError(f"k must be >= 1, got {k}")
    n = len(author.texts)
    rng = np.random.default_rng(derive_seed(seed, f"select_random:{author.id}"))
    chosen = rng.choice(n, size=min(k, n), replace=False)
    return sorted(int(i) for i in chosen)


def agglomerative_clusters(vectors, threshold: float) -> ClusterResult:
    """Bottom-up average-linkage agglomeration under cosine distance.

    Merging stops once the minimum inter-cluster average distance
    exceeds the threshold (pairs at exactly the threshold still merge).
    Merge order is deterministic: the candidate pair with the smallest
    (distance, id_i, id_j) wins, where a cluster's id is its smallest
    member index.
    """
    vectors = [np.asarray(v, dtype=np.float64) for v in vectors]
    if not vectors:
        raise ValidationError("need at least one vector")
    dim = vectors[0].shape
    for v in vectors[1:]:
        if v.shape != dim:
            raise ValidationError(f"dimension mismatch: {v.shape} vs {dim}")
    n = len(vectors)

    normed = np.stack([l2_normalize(v) for v in vectors])
    dist = 1.0 - normed @ normed.T

    # Active clusters keyed by smallest member index; average-linkage
    # distances updated with the Lance-Williams recurrence.
    members: dict[int, list[int]] = {i: [i] for i in range(n)}
    d: dict[tuple[int, int], float] = {
        (i, j): float(dist[i, j]) for i in range(n) for j in range(i + 1, n)
    }
    while len(members) > 1:
        (i, j) = min(d, key=lambda key: (d[key], key))
        if d[(i, j)] > threshold:
            break
        size_i, size_j = len(members[i]), len(members[j])
        for k in members:
            if k == i or k == j:
                continue
            a, b = (min(k, i), max(k, i)), (min(k, j), max(k, j))
            merged = (size_i * d[a] + size_j * d[b]) / (size_i + size_j)
            d[(min(k, i), max(k, i))] = merged
            del d[b]
        del d[(i, j)]
        members[i] = sorted(members[i] + members[j])
        del members[j]

    clusters = [members[cid] for cid in sorted(members)]
    centroids = [np.mean([vectors[m] for m in cluster], axis=0) for cluster in clusters]
    representatives = []
    for cluster, centroid in zip(clusters, centroids):
        rep = min(cluster, key=lambda m: (cosine_distance(vectors[m], centroid), m))
        representatives.append(rep)
    return ClusterResult(clusters=clusters, centroids=centroids, representatives=representatives)


def select_instances(
    author: Author,
    encoder,
    cfg: SelectionConfig,
    vectors=None,
) -> list[int]:
    """Selected text indices for one author, sorted ascending.

    method="random" draws cfg.k texts; method="cluster" keeps the
    representative of each agglomerative cluster of the author's text
    embeddings.  ``vectors`` overrides the encoder (one vector per text,
    e.g. from an external embedding table).
    """
    if cfg.method == "random":
        return select_random(author, cfg.k, cfg.seed)
    if vectors is None:
        if encoder is None:
            raise ValidationError("cluster selection needs an encoder or precomputed vectors")
        vectors = [encoder.embed(t) for t in author.texts]
    elif len(vectors) != len(author.texts):
        raise ValidationError(
            f"got {len(vectors)} vectors for {len(author.texts)} texts of author {author.id!r}"
        )
    result = agglomerative_clusters(vectors, cfg.threshold)
    return sorted(result.representatives)

"""Turning per-text label scores into a single author label.

Each of an author's texts is scored against every label, converted to a
probability row, and the rows are summed; the author's label is the
argmax of the summed scores (earliest label in label_set on ties).
Prediction always uses all of an author's texts; instance selection is
a training-time concern only.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .corpus import Author
from .embed import EmbeddingTable
from .entail import HypothesisSet, PairScoreTable
from .errors import ValidationError
from .siamese import ProjectionHead, project

SOURCE_SIAMESE = "siamese"
SOURCE_PAIR_SCORES = "pair_scores"


def text_probabilities(scores, source: str) -> np.ndarray:
    """Per-label probability row for one text.

    Siamese similarity scores go through a temperature-1 softmax;
    pair-score rows (entailment probabilities in [0, 1]) are divided by
    their sum, falling back to uniform when the sum is zero.
    """
    scores = np.asarray(scores, dtype=np.float64)
    if scores.ndim != 1 or scores.shape[0] < 1:
        raise ValidationError(f"scores must be a non-empty 1-D array, got shape {scores.shape}")
    if not np.all(np.isfinite(scores)):
        raise ValidationError("scores contain non-finite entries")
    if source == SOURCE_SIAMESE:
        shifted = np.exp(scores - scores.max())
        return shifted / shifted.sum()
    if source == SOURCE_PAIR_SCORES:
        if scores.min() < 0.0 or scores.max() > 1.0:
            raise ValidationError("pair scores must lie in [0, 1]")
        total = scores.sum()
        if total == 0.0:
            return np.full(scores.shape[0], 1.0 / scores.shape[0])
        return scores / total
    raise ValidationError(f"unknown score source {source!r}")


def aggregate_author(P: np.ndarray, label_set) -> tuple[str, np.ndarray]:
    """Sum per-text probability rows and argmax.

    Ties break toward the earliest label in label_set (np.argmax picks
    the first maximum, and columns follow label_set order).
    """
    P = np.asarray(P, dtype=np.float64)
    label_set = list(label_set)
    if P.ndim != 2 or P.shape[0] < 1:
        raise ValidationError(f"P must be a non-empty matrix, got shape {P.shape}")
    if P.shape[1] != len(label_set):
        raise ValidationError(f"P has {P.shape[1]} columns for {len(label_set)} labels")
    summed = P.sum(axis=0)
    return label_set[int(np.argmax(summed))], summed


@dataclass
class PredictionResult:
    author_id: str
    label: str
    summed_scores: np.ndarray = field(repr=False)
    per_text: np.ndarray = field(repr=False)
    source: str = SOURCE_SIAMESE


@dataclass
class SiamesePipeline:
    """Encoder + head + hypotheses, with the hypothesis projections cached."""

    encoder: object
    head: ProjectionHead | None
    hset: HypothesisSet
    _hyp_matrix: np.ndarray = field(default=None, repr=False)

    @property
    def label_set(self) -> list[str]:
        return self.hset.labels

    def hypothesis_matrix(self) -> np.ndarray:
        if self._hyp_matrix is None:
            self._hyp_matrix = np.stack(
                [project(self.head, self.encoder.embed(h.text)) for h in self.hset.hypotheses]
            )
        return self._hyp_matrix

    def scores(self, text: str) -> np.ndarray:
        """score[l] = f(text) . f(hypothesis_l), ordered by label_set."""
        return self.hypothesis_matrix() @ project(self.head, self.encoder.embed(text))


def predict_author_from_table(
    author: Author, table: EmbeddingTable, label_set
) -> PredictionResult:
    """Zero-shot prediction from externally computed embeddings.

    Text vectors come from the table by (author_id, text_index);
    hypothesis vectors sit under the reserved hypothesis author id,
    indexed by label position.
    """
    if not author.texts:
        raise ValidationError(f"author {author.id!r} has no texts")
    labels = list(label_set)
    hyp = np.stack([table.hypothesis_vector(i) for i in range(len(labels))])
    rows = [hyp @ table.vector(author.id, i) for i in range(len(author.texts))]
    P = np.stack([text_probabilities(row, SOURCE_SIAMESE) for row in rows])
    label, summed = aggregate_author(P, labels)
    return PredictionResult(
        author_id=author.id, label=label, summed_scores=summed, per_text=P, source=SOURCE_SIAMESE
    )


def predict_author(author: Author, pipeline, label_set=None) -> PredictionResult:
    """Predict one author from all of their texts.

    ``pipeline`` is either a :class:`SiamesePipeline` or a
    :class:`PairScoreTable` (which needs an explicit ``label_set``).
    """
    if not author.texts:
        raise ValidationError(f"author {author.id!r} has no texts")
    if isinstance(pipeline, PairScoreTable):
        if label_set is None:
            raise ValidationError("pair-score prediction needs a label_set")
        labels = list(label_set)
        source = SOURCE_PAIR_SCORES
        rows = [
            [pipeline.prob(author.id, i, label) for label in labels]
            for i in range(len(author.texts))
        ]
    else:
        labels = pipeline.label_set
        source = SOURCE_SIAMESE
        rows = [pipeline.scores(t) for t in author.texts]
    P = np.stack([text_probabilities(row, source) for row in rows])
    label, summed = aggregate_author(P, labels)
    return PredictionResult(
        author_id=author.id, label=label, summed_scores=summed, per_text=P, source=source
    )

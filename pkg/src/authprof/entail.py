"""Label hypotheses and entailment pair generation.

Each label is represented by a natural-language hypothesis; a labeled
text becomes one entailed pair (with its own label's hypothesis) and
one contradicted pair per other label.  Externally computed entailment
probabilities are consumed through :class:`PairScoreTable`.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from .corpus import Author
from .errors import ValidationError

ENTAILED = "entailed"
CONTRADICTED = "contradicted"


@dataclass
class Hypothesis:
    label: str
    text: str


@dataclass
class HypothesisSet:
    """One hypothesis per label, ordered by the task's label_set."""

    name: str
    hypotheses: list[Hypothesis]

    @property
    def labels(self) -> list[str]:
        return [h.label for h in self.hypotheses]

    def text_for(self, label: str) -> str:
        for h in self.hypotheses:
            if h.label == label:
                return h.text
        raise ValidationError(f"no hypothesis for label {label!r}")

    @classmethod
    def from_mapping(cls, mapping: dict, label_set, name: str = "custom") -> HypothesisSet:
        """Build a set from a label->text mapping, in label_set order.

        Labels missing from the mapping fall back to the identity
        hypothesis (the raw label string).  Unknown labels and empty
        hypothesis texts are errors.
        """
        label_set = list(label_set)
        unknown = [l for l in mapping if l not in label_set]
        if unknown:
            raise ValidationError(f"hypotheses for unknown labels: {unknown}")
        hypotheses = []
        for label in label_set:
            text = mapping.get(label, label)
            if not isinstance(text, str) or not text.strip():
                raise ValidationError(f"empty hypothesis text for label {label!r}")
            hypotheses.append(Hypothesis(label=label, text=text))
        return cls(name=name, hypotheses=hypotheses)


def identity_hypotheses(label_set) -> HypothesisSet:
    """The identity set: each label represented by its raw label string."""
    return HypothesisSet.from_mapping({}, label_set, name="identity")


def load_hypotheses(path, label_set) -> HypothesisSet:
    """Load a single hypothesis set from a JSON object file.

    The file maps some or all labels to hypothesis texts; missing labels
    get the identity hypothesis.
    """
    with open(path, "r", encoding="utf-8") as fh:
        data = json.load(fh)
    if not isinstance(data, dict):
        raise ValidationError(f"{path}: expected a JSON object of label -> hypothesis")
    return HypothesisSet.from_mapping(data, label_set, name=Path(path).stem)


def load_hypothesis_sets(path, label_set) -> list[HypothesisSet]:
    """Load one or more named hypothesis sets (for sweeps).

    Accepts either a single JSON object (one set) or an array of
    ``{"name": ..., "hypotheses": {...}}`` entries.
    """
    with open(path, "r", encoding="utf-8") as fh:
        data = json.load(fh)
    if isinstance(data, dict):
        return [HypothesisSet.from_mapping(data, label_set, name=Path(path).stem)]
    if not isinstance(data, list):
        raise ValidationError(f"{path}: expected a JSON object or array of named sets")
    sets = []
    for i, entry in enumerate(data):
        if not isinstance(entry, dict) or "hypotheses" not in entry:
            raise ValidationError(f"{path}: entry {i} must carry a 'hypotheses' object")
        name = str(entry.get("name", f"set{i}"))
        sets.append(HypothesisSet.from_mapping(entry["hypotheses"], label_set, name=name))
    if not sets:
        raise ValidationError(f"{path}: no hypothesis sets found")
    return sets


@dataclass
class PairExample:
    """One (premise, hypothesis) training instance.

    ``klass`` is entailed iff the hypothesis belongs to the premise
    text's reference label.
    """

    premise: str
    hypothesis: str
    klass: str
    label: str
    author_id: str
    text_index: int


def generate_pairs(authors: list[Author], hset: HypothesisSet) -> list[PairExample]:
    """Expand labeled texts into entailment pairs.

    Per text with reference label l: one entailed pair with hset[l] and
    one contradicted pair with every other label's hypothesis, so the
    total is (#texts) * |label_set|.  Output order is canonical:
    (author_id, text_index, label position).
    """
    labels = hset.labels
    pairs: list[PairExample] = []
    for author in sorted(authors, key=lambda a: a.id):
        if author.label is None:
            raise ValidationError(f"author {author.id!r} is unlabeled")
        if author.label not in labels:
            raise ValidationError(f"author {author.id!r} has unknown label {author.label!r}")
        for text_index, text in enumerate(author.texts):
            for hyp in hset.hypotheses:
                klass = ENTAILED if hyp.label == author.label else CONTRADICTED
                pairs.append(
                    PairExample(
                        premise=text,
                        hypothesis=hyp.text,
                        klass=klass,
                        label=author.label,
                        author_id=author.id,
                        text_index=text_index,
                    )
                )
    return pairs


@dataclass
class PairScoreTable:
    """Entailment probabilities keyed by (author_id, text_index, label).

    Adapter for models that score premise/hypothesis pairs jointly and
    are consumed here only through their per-pair probabilities.
    """

    scores: dict = field(default_factory=dict, repr=False)

    def __len__(self) -> int:
        return len(self.scores)

    def prob(self, author_id: str, text_index: int, label: str) -> float:
        key = (author_id, text_index, label)
        if key not in self.scores:
            raise ValidationError(f"missing pair score for {key}")
        return self.scores[key]


def load_pair_scores(path) -> PairScoreTable:
    """Load a pair-score JSONL file, validating range and uniqueness."""
    scores: dict = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                record = json.loads(line)
                key = (str(record["author_id"]), int(record["text_index"]), str(record["label"]))
                prob = float(record["entail_prob"])
            except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
                raise ValidationError(f"{path}: bad pair-score record on line {lineno}: {exc}") from exc
            if not 0.0 <= prob <= 1.0:
                raise ValidationError(
                    f"{path}: line {lineno}: entail_prob {prob} outside [0, 1]"
                )
            if key in scores:
                raise ValidationError(f"{path}: duplicate pair score for {key} on line {lineno}")
            scores[key] = prob
    return PairScoreTable(scores=scores)

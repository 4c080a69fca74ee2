"""Dataset model, JSONL ingestion, and author-level splitting.

An author is the unit of everything: splitting, subsampling, and
prediction all operate on whole authors so that no author's texts ever
straddle a train/test boundary.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field

import numpy as np

from .errors import ValidationError
from .hashing import derive_seed

logger = logging.getLogger(__name__)


@dataclass
class Author:
    """One author: a unique id, their texts, and an optional gold label."""

    id: str
    texts: list[str]
    label: str | None = None


@dataclass
class LabeledDataset:
    """Authors plus the ordered label set used for all tie-breaking."""

    authors: list[Author]
    label_set: list[str]
    dropped_texts: int = 0

    def __len__(self) -> int:
        return len(self.authors)

    def by_id(self) -> dict[str, Author]:
        return {a.id: a for a in self.authors}

    def all_texts(self) -> list[str]:
        return [t for a in self.authors for t in a.texts]

    def subset(self, ids) -> LabeledDataset:
        """Dataset restricted to the given author ids, original order kept."""
        wanted = set(ids)
        authors = [a for a in self.authors if a.id in wanted]
        missing = wanted - {a.id for a in authors}
        if missing:
            raise ValidationError(f"unknown author ids: {sorted(missing)}")
        return LabeledDataset(authors=authors, label_set=list(self.label_set))


@dataclass
class FoldSplit:
    """Author-level train/test split for one cross-validation fold."""

    fold_index: int
    train_ids: list[str]
    test_ids: list[str]


def load_dataset(path, fmt: str = "jsonl") -> LabeledDataset:
    """Load a dataset from JSONL (one author per line).

    An optional first-line header ``{"label_set": [...]}`` fixes the
    label order; otherwise labels are ordered by first appearance.
    Whitespace-only texts are dropped (with a logged count); an author
    with zero usable texts is an error, as is a duplicate author id.
    """
    if fmt != "jsonl":
        raise ValidationError(f"unsupported dataset format: {fmt!r}")
    authors: list[Author] = []
    seen_ids: set[str] = set()
    declared_labels: list[str] | None = None
    label_order: list[str] = []
    dropped = 0
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ValidationError(f"{path}: malformed JSON on line {lineno}: {exc}") from exc
            if lineno == 1 and "label_set" in record and "author_id" not in record:
                declared_labels = [str(l) for l in record["label_set"]]
                if len(set(declared_labels)) != len(declared_labels):
                    raise ValidationError(f"{path}: duplicate labels in header label_set")
                continue
            if "author_id" not in record or "texts" not in record:
                raise ValidationError(f"{path}: line {lineno} is missing author_id or texts")
            author_id = str(record["author_id"])
            if author_id in seen_ids:
                raise ValidationError(f"{path}: duplicate author id {author_id!r} on line {lineno}")
            seen_ids.add(author_id)
            raw_label = record.get("label")
            label = None if raw_label is None else str(raw_label)
            texts = record["texts"]
            if not isinstance(texts, list) or not all(isinstance(t, str) for t in texts):
                raise ValidationError(f"{path}: line {lineno}: texts must be a list of strings")
            usable = [t for t in texts if t.strip()]
            dropped += len(texts) - len(usable)
            if not usable:
                raise ValidationError(
                    f"{path}: author {author_id!r} (line {lineno}) has zero usable texts"
                )
            if label is not None:
                if declared_labels is not None:
                    if label not in declared_labels:
                        raise ValidationError(
                            f"{path}: line {lineno}: label {label!r} not in declared label_set"
                        )
                elif label not in label_order:
                    label_order.append(label)
            authors.append(Author(id=author_id, texts=usable, label=label))
    if dropped:
        logger.warning("%s: dropped %d whitespace-only texts", path, dropped)
    label_set = declared_labels if declared_labels is not None else label_order
    return LabeledDataset(authors=authors, label_set=label_set, dropped_texts=dropped)


def write_dataset(ds: LabeledDataset, path) -> None:
    """Serialize a dataset back to JSONL (header line + one author per line)."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(json.dumps({"label_set": ds.label_set}, ensure_ascii=False) + "\n")
        for a in ds.authors:
            record = {"author_id": a.id, "label": a.label, "texts": a.texts}
            fh.write(json.dumps(record, ensure_ascii=False) + "\n")


def stratified_kfold(ds: LabeledDataset, k: int, seed: int) -> list[FoldSplit]:
    """Class-stratified k-fold split at the author level.

    Every author lands in exactly one test fold; per fold and class the
    test count is floor(n_c/k) or ceil(n_c/k).  Deterministic per seed.
    """
    if k < 2:
        raise ValidationError(f"k must be >= 2, got {k}")
    unlabeled = [a.id for a in ds.authors if a.label is None]
    if unlabeled:
        raise ValidationError(f"cannot stratify unlabeled authors: {unlabeled[:5]}")
    by_class: dict[str, list[str]] = {label: [] for label in ds.label_set}
    for a in ds.authors:
        by_class[a.label].append(a.id)
    for label, ids in by_class.items():
        if 0 < len(ids) < k:
            raise ValidationError(
                f"class {label!r} has only {len(ids)} authors, fewer than k={k}"
            )

    rng = np.random.default_rng(derive_seed(seed, "stratified_kfold"))
    test_sides: list[list[str]] = [[] for _ in range(k)]
    for label in ds.label_set:
        ids = list(by_class[label])
        rng.shuffle(ids)
        n_c = len(ids)
        base, extra = divmod(n_c, k)
        start = 0
        for fold in range(k):
            size = base + (1 if fold < extra else 0)
            test_sides[fold].extend(ids[start : start + size])
            start += size

    all_ids = [a.id for a in ds.authors]
    folds = []
    for fold in range(k):
        test = set(test_sides[fold])
        train_ids = [i for i in all_ids if i not in test]
        test_ids = [i for i in all_ids if i in test]
        folds.append(FoldSplit(fold_index=fold, train_ids=train_ids, test_ids=test_ids))
    return folds


def subsample_users(ds: LabeledDataset, n_per_label: int, seed: int) -> LabeledDataset:
    """Sample up to ``n_per_label`` labeled authors per class, without replacement.

    Shortfall (a class with fewer authors than requested) is logged,
    not fatal.  Unlabeled authors are excluded.  Deterministic per seed;
    label_set is unchanged.
    """
    if n_per_label < 1:
        raise ValidationError(f"n_per_label must be >= 1, got {n_per_label}")
    rng = np.random.default_rng(derive_seed(seed, "subsample_users"))
    keep: set[str] = set()
    for label in ds.label_set:
        ids = [a.id for a in ds.authors if a.label == label]
        if len(ids) < n_per_label:
            logger.warning(
                "class %r has %d authors, fewer than requested %d", label, len(ids), n_per_label
            )
        take = min(n_per_label, len(ids))
        if take:
            chosen = rng.choice(len(ids), size=take, replace=False)
            keep.update(ids[i] for i in chosen)
    authors = [a for a in ds.authors if a.id in keep]
    return LabeledDataset(authors=authors, label_set=list(ds.label_set))

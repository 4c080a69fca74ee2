"""Synthetic corpora with class-separable vocabularies.

Used by the demos and the end-to-end checks: each class draws its words
from a disjoint character pool, so texts share character n-grams with
their own class's hypothesis and (hash collisions aside) almost none
with the other class's.
"""

from __future__ import annotations

import numpy as np

from .corpus import Author, LabeledDataset
from .entail import HypothesisSet
from .errors import ValidationError

_POOLS = ("abcdefghijklm", "nopqrstuvwxyz")


def _make_vocab(rng, pool: str, size: int) -> list[str]:
    vocab: list[str] = []
    seen = set()
    while len(vocab) < size:
        length = int(rng.integers(4, 8))
        word = "".join(rng.choice(list(pool), size=length))
        if word not in seen:
            seen.add(word)
            vocab.append(word)
    return vocab


def two_class_corpus(
    authors_per_class: int = 64,
    texts_per_author: int = 20,
    words_per_text: int = 8,
    vocab_size: int = 30,
    hypothesis_words: int = 6,
    seed: int = 0,
    labels: tuple[str, str] = ("alpha", "beta"),
) -> tuple[LabeledDataset, HypothesisSet]:
    """Two-class dataset with disjoint class character pools.

    Returns the dataset and a hypothesis set whose texts are sampled
    from each class's vocabulary.
    """
    if len(labels) != 2:
        raise ValidationError("two_class_corpus builds exactly two classes")
    rng = np.random.default_rng(seed)
    vocabs = {label: _make_vocab(rng, pool, vocab_size) for label, pool in zip(labels, _POOLS)}

    authors = []
    for label in labels:
        vocab = vocabs[label]
        for i in range(authors_per_class):
            texts = [
                " ".join(rng.choice(vocab, size=words_per_text))
                for _ in range(texts_per_author)
            ]
            authors.append(Author(id=f"{label}-{i:03d}", texts=texts, label=label))

    mapping = {
        label: " ".join(rng.choice(vocabs[label], size=hypothesis_words, replace=False))
        for label in labels
    }
    hset = HypothesisSet.from_mapping(mapping, list(labels), name="synthetic")
    return LabeledDataset(authors=authors, label_set=list(labels)), hset

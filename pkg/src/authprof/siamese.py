"""Siamese scoring and few-shot training.

The trainable model is a single linear head W shared by both towers:
f(x) = normalize(W . embed(x)), scored by S(x, y) = f(x) . f(y).
Training minimizes the batch softmax

    J = -(1/B) * sum_i [ S(x_i, y_i) - log sum_j exp S(x_i, y_j) ]

over batches that contain exactly one entailed example per label, so
the other batch members act as in-batch negatives.  Gradients are
analytic; plain gradient descent with a constant learning rate.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .embed import l2_normalize, similarity
from .entail import ENTAILED, HypothesisSet, PairExample
from .errors import ValidationError
from .hashing import derive_seed


@dataclass
class ProjectionHead:
    """Linear map (out_dim x in_dim) applied on top of frozen embeddings."""

    weights: np.ndarray

    @property
    def out_dim(self) -> int:
        return self.weights.shape[0]

    @property
    def in_dim(self) -> int:
        return self.weights.shape[1]


@dataclass
class TrainConfig:
    """Few-shot training settings.

    The batch size is always the number of labels and is therefore not a
    field here.
    """

    epochs: int = 10
    learning_rate: float = 0.1
    seed: int = 0


def init_head(in_dim: int, out_dim: int, seed: int) -> ProjectionHead:
    """Uniform init on [-a, a] with a = sqrt(6 / (in_dim + out_dim))."""
    if in_dim < 1 or out_dim < 1:
        raise ValidationError(f"head dims must be >= 1, got in={in_dim}, out={out_dim}")
    a = np.sqrt(6.0 / (in_dim + out_dim))
    rng = np.random.default_rng(seed)
    weights = rng.uniform(-a, a, size=(out_dim, in_dim))
    return ProjectionHead(weights=weights)


def identity_head(dim: int) -> ProjectionHead:
    """Square identity head: project() reduces to plain normalization."""
    return ProjectionHead(weights=np.eye(dim))


def project(head: ProjectionHead | None, v: np.ndarray) -> np.ndarray:
    """f(v) = normalize(W v).  ``head=None`` means the identity map.

    Zero inputs (and zero projections) pass through as degenerate zero
    vectors.
    """
    v = np.asarray(v, dtype=np.float64)
    if head is None:
        return l2_normalize(v)
    if v.shape != (head.in_dim,):
        raise ValidationError(f"dimension mismatch: vector {v.shape} vs head in_dim {head.in_dim}")
    return l2_normalize(head.weights @ v)


def batch_softmax_loss(S: np.ndarray) -> tuple[float, np.ndarray]:
    """Batch-softmax loss and its gradient with respect to S.

    Diagonal entries of S are the matched (entailed) pairs; off-diagonal
    entries are in-batch negatives.  Returns (J, dJ/dS) where
    dJ/dS[i][j] = (softmax_j(S[i]) - 1{i=j}) / B.  The log-sum-exp is
    computed with max subtraction.
    """
    S = np.asarray(S, dtype=np.float64)
    if S.ndim != 2 or S.shape[0] != S.shape[1]:
        raise ValidationError(f"S must be square, got shape {S.shape}")
    if not np.all(np.isfinite(S)):
        raise ValidationError("S contains non-finite entries")
    b = S.shape[0]
    row_max = S.max(axis=1, keepdims=True)
    exp_shift = np.exp(S - row_max)
    lse = row_max[:, 0] + np.log(exp_shift.sum(axis=1))
    loss = float(-(np.diag(S) - lse).mean())
    softmax = exp_shift / exp_shift.sum(axis=1, keepdims=True)
    grad = (softmax - np.eye(b)) / b
    return loss, grad


def make_batches(
    pairs_by_label: dict[str, list[PairExample]],
    label_set,
    seed: int,
) -> list[list[PairExample]]:
    """One epoch's batches: each batch holds one example per label.

    Every label's example queue is shuffled (seeded); the number of
    batches is the max per-label count and shorter labels cycle their
    shuffled queue.
    """
    label_set = list(label_set)
    for label in label_set:
        if not pairs_by_label.get(label):
            raise ValidationError(f"label {label!r} has no entailed examples")
    rng = np.random.default_rng(seed)
    queues = {}
    for label in label_set:
        examples = pairs_by_label[label]
        order = rng.permutation(len(examples))
        queues[label] = [examples[i] for i in order]
    n_batches = max(len(q) for q in queues.values())
    return [
        [queues[label][b % len(queues[label])] for label in label_set]
        for b in range(n_batches)
    ]


def head_loss_and_grad(
    head: ProjectionHead, U: np.ndarray, V: np.ndarray
) -> tuple[float, np.ndarray]:
    """Loss and analytic dJ/dW for one batch of raw embeddings.

    U and V hold the premise and hypothesis embeddings as rows (B rows
    each, matched by index).  Both towers share W, so the gradient sums
    the premise-side and hypothesis-side contributions.  Rows whose
    projection is the zero vector contribute zero gradient.
    """
    W = head.weights
    U = np.asarray(U, dtype=np.float64)
    V = np.asarray(V, dtype=np.float64)

    def forward(X):
        A = X @ W.T
        norms = np.linalg.norm(A, axis=1)
        safe = np.where(norms == 0.0, 1.0, norms)
        return A, norms, A / safe[:, None]

    _, norms_p, P = forward(U)
    _, norms_h, H = forward(V)
    S = P @ H.T
    loss, G = batch_softmax_loss(S)

    def backward(dNorm, N, norms, X):
        # Through row normalization: dA = (dN - (dN.N) N) / ||A||, zero rows drop out.
        safe = np.where(norms == 0.0, 1.0, norms)
        dA = (dNorm - (dNorm * N).sum(axis=1, keepdims=True) * N) / safe[:, None]
        dA[norms == 0.0] = 0.0
        return dA.T @ X

    dP = G @ H
    dH = G.T @ P
    dW = backward(dP, P, norms_p, U)
    np.add(dW, backward(dH, H, norms_h, V), out=dW)
    return loss, dW


def train(
    head: ProjectionHead,
    pairs: list[PairExample],
    encoder,
    cfg: TrainConfig,
    label_set,
) -> tuple[ProjectionHead, list[float]]:
    """Gradient descent on the head over entailed pairs.

    Contradicted pairs are ignored here; their role is played by the
    in-batch negatives.  Embeddings of the frozen encoder are cached per
    distinct text.  Returns a new head and the mean batch loss per epoch.
    """
    label_set = list(label_set)
    entailed = [p for p in pairs if p.klass == ENTAILED]
    by_label: dict[str, list[PairExample]] = {label: [] for label in label_set}
    for p in entailed:
        if p.label not in by_label:
            raise ValidationError(f"pair label {p.label!r} not in label set")
        by_label[p.label].append(p)

    cache: dict[str, np.ndarray] = {}

    def embed(text: str) -> np.ndarray:
        if text not in cache:
            cache[text] = encoder.embed(text)
        return cache[text]

    W = head.weights.copy()
    lr = cfg.learning_rate
    loss_history: list[float] = []
    for epoch in range(cfg.epochs):
        batches = make_batches(by_label, label_set, derive_seed(cfg.seed, f"epoch:{epoch}"))
        epoch_losses = []
        for batch in batches:
            U = np.stack([embed(p.premise) for p in batch])
            V = np.stack([embed(p.hypothesis) for p in batch])
            loss, dW = head_loss_and_grad(ProjectionHead(weights=W), U, V)
            # In-place update; dW is ours to scale.
            np.multiply(dW, lr, out=dW)
            np.subtract(W, dW, out=W)
            epoch_losses.append(loss)
        loss_history.append(float(np.mean(epoch_losses)))
    return ProjectionHead(weights=W), loss_history


def save_head(head: ProjectionHead, path, seed: int = 0, epochs: int = 0) -> None:
    """Write a head checkpoint as JSON."""
    payload = {
        "in_dim": head.in_dim,
        "out_dim": head.out_dim,
        "weights": head.weights.tolist(),
        "seed": seed,
        "epochs": epochs,
    }
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_head(path) -> ProjectionHead:
    """Read a head checkpoint written by :func:`save_head`."""
    with open(path, "r", encoding="utf-8") as fh:
        payload = json.load(fh)
    weights = np.asarray(payload["weights"], dtype=np.float64)
    if weights.shape != (payload["out_dim"], payload["in_dim"]):
        raise ValidationError(
            f"{path}: weights shape {weights.shape} does not match declared dims"
        )
    return ProjectionHead(weights=weights)


def zero_shot_scores(
    encoder, head: ProjectionHead | None, text: str, hset: HypothesisSet
) -> np.ndarray:
    """Per-label similarity scores for one text, in label_set order.

    score[l] = f(text) . f(hypothesis_l); with ``head=None`` this is the
    pure zero-shot path (identity head).
    """
    f_text = project(head, encoder.embed(text))
    return np.array(
        [similarity(f_text, project(head, encoder.embed(h.text))) for h in hset.hypotheses]
    )

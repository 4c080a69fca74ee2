"""Metrics, the cross-validation driver, sweeps, and the character
n-gram logistic-regression baseline.

Reports carry per-fold accuracy and macro-F1 with their mean and
population standard deviation, plus the users-per-label count n and the
total number of selected training texts s.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace

import numpy as np

from .corpus import Author, LabeledDataset, stratified_kfold, subsample_users
from .embed import fit_encoder
from .entail import HypothesisSet, generate_pairs
from .errors import ValidationError
from .hashing import derive_seed
from .profiling import SiamesePipeline, predict_author
from .selection import SelectionConfig, select_instances
from .siamese import TrainConfig, init_head, train

logger = logging.getLogger(__name__)


@dataclass
class Metrics:
    accuracy: float
    macro_f1: float
    per_class_f1: dict[str, float] = field(default_factory=dict)


def accuracy(pred, gold) -> float:
    """Fraction of exact matches."""
    if len(pred) != len(gold):
        raise ValidationError(f"length mismatch: {len(pred)} predictions vs {len(gold)} golds")
    if not pred:
        raise ValidationError("cannot compute accuracy of empty lists")
    return sum(p == g for p, g in zip(pred, gold)) / len(pred)


def macro_f1(pred, gold, label_set) -> Metrics:
    """Accuracy plus macro-F1 over the FULL label set.

    Per class: precision = TP/(TP+FP), recall = TP/(TP+FN), both 0 when
    their denominator is 0; F1 = 2PR/(P+R), 0 when P+R = 0.  Classes
    absent from a fold contribute F1 = 0 to the unweighted mean.
    """
    label_set = list(label_set)
    known = set(label_set)
    for lab in list(pred) + list(gold):
        if lab not in known:
            raise ValidationError(f"unknown label {lab!r}")
    acc = accuracy(pred, gold)
    per_class: dict[str, float] = {}
    for label in label_set:
        tp = sum(1 for p, g in zip(pred, gold) if p == label and g == label)
        fp = sum(1 for p, g in zip(pred, gold) if p == label and g != label)
        fn = sum(1 for p, g in zip(pred, gold) if p != label and g == label)
        precision = tp / (tp + fp) if (tp + fp) else 0.0
        recall = tp / (tp + fn) if (tp + fn) else 0.0
        f1 = 2 * precision * recall / (precision + recall) if (precision + recall) else 0.0
        per_class[label] = f1
    macro = sum(per_class.values()) / len(label_set)
    return Metrics(accuracy=acc, macro_f1=macro, per_class_f1=per_class)


def mean_metrics(folds: list[Metrics]) -> Metrics:
    labels = folds[0].per_class_f1.keys()
    return Metrics(
        accuracy=float(np.mean([m.accuracy for m in folds])),
        macro_f1=float(np.mean([m.macro_f1 for m in folds])),
        per_class_f1={l: float(np.mean([m.per_class_f1[l] for m in folds])) for l in labels},
    )


def std_metrics(folds: list[Metrics]) -> Metrics:
    # Population std (divide by k), documented in the report schema.
    labels = folds[0].per_class_f1.keys()
    return Metrics(
        accuracy=float(np.std([m.accuracy for m in folds])),
        macro_f1=float(np.std([m.macro_f1 for m in folds])),
        per_class_f1={l: float(np.std([m.per_class_f1[l] for m in folds])) for l in labels},
    )


@dataclass
class EvalConfig:
    """Everything one cross-validated run needs besides data and seed."""

    hset: HypothesisSet
    mode: str = "zeroshot"  # "zeroshot" or "fewshot"
    n_per_label: int | None = None
    selection: SelectionConfig | None = None
    head_out_dim: int = 128
    epochs: int = 10
    learning_rate: float = 0.1
    n_range: tuple[int, int] = (1, 5)
    hash_dim: int = 4096
    lowercase: bool = True

    def summary(self) -> dict:
        return {
            "hypotheses": self.hset.name,
            "mode": self.mode,
            "n_per_label": self.n_per_label,
            "selection": None
            if self.selection is None
            else {
                "method": self.selection.method,
                "k": self.selection.k,
                "threshold": self.selection.threshold,
            },
            "head_out_dim": self.head_out_dim,
            "epochs": self.epochs,
            "learning_rate": self.learning_rate,
            "n_range": list(self.n_range),
            "hash_dim": self.hash_dim,
            "lowercase": self.lowercase,
        }


@dataclass
class EvalReport:
    config: dict
    n: int
    s: float
    s_per_fold: list[int]
    per_fold: list[Metrics]
    mean: Metrics
    std: Metrics

    def to_dict(self) -> dict:
        def metrics_dict(m: Metrics) -> dict:
            return {
                "accuracy": m.accuracy,
                "macro_f1": m.macro_f1,
                "per_class_f1": dict(sorted(m.per_class_f1.items())),
            }

        return {
            "config": self.config,
            "n": self.n,
            "s": self.s,
            "s_per_fold": self.s_per_fold,
            "per_fold": [metrics_dict(m) for m in self.per_fold],
            "mean": metrics_dict(self.mean),
            "std": metrics_dict(self.std),
        }


def select_training_texts(
    authors: list[Author], encoder, selection: SelectionConfig | None, seed: int
) -> list[Author]:
    """Apply instance selection, returning trimmed author copies."""
    if selection is None:
        return authors
    cfg = replace(selection, seed=seed)
    trimmed = []
    for author in authors:
        keep = select_instances(author, encoder, cfg)
        trimmed.append(Author(id=author.id, texts=[author.texts[i] for i in keep], label=author.label))
    return trimmed


def cross_validate(ds: LabeledDataset, k: int, cfg: EvalConfig, seed: int) -> EvalReport:
    """Stratified k-fold evaluation of one configuration.

    Per fold: optionally subsample the train side to n users per label,
    apply instance selection, generate entailment pairs, train the head,
    then predict every test author from all of their texts.  The
    zero-shot mode skips training and scores with the identity head.
    The encoder is fitted once on the full corpus, mirroring a frozen
    pretrained encoder.
    """
    if cfg.mode not in ("zeroshot", "fewshot"):
        raise ValidationError(f"unknown mode {cfg.mode!r}")
    encoder = fit_encoder(
        ds.all_texts(), n_range=cfg.n_range, hash_dim=cfg.hash_dim, lowercase=cfg.lowercase
    )
    folds = stratified_kfold(ds, k, derive_seed(seed, "folds"))
    by_id = ds.by_id()

    per_fold: list[Metrics] = []
    s_per_fold: list[int] = []
    for fold in folds:
        train_authors = [by_id[i] for i in fold.train_ids]
        test_authors = [by_id[i] for i in fold.test_ids]
        if cfg.mode == "fewshot":
            train_ds = LabeledDataset(authors=train_authors, label_set=ds.label_set)
            if cfg.n_per_label is not None:
                train_ds = subsample_users(
                    train_ds,
                    cfg.n_per_label,
                    derive_seed(seed, f"subsample:fold{fold.fold_index}:n{cfg.n_per_label}"),
                )
            selected = select_training_texts(
                train_ds.authors,
                encoder,
                cfg.selection,
                derive_seed(seed, f"select:fold{fold.fold_index}"),
            )
            s_fold = sum(len(a.texts) for a in selected)
            pairs = generate_pairs(selected, cfg.hset)
            head = init_head(
                encoder.dim, cfg.head_out_dim, derive_seed(seed, f"init:fold{fold.fold_index}")
            )
            head, _ = train(
                head,
                pairs,
                encoder,
                TrainConfig(
                    epochs=cfg.epochs,
                    learning_rate=cfg.learning_rate,
                    seed=derive_seed(seed, f"train:fold{fold.fold_index}"),
                ),
                ds.label_set,
            )
        else:
            head = None
            s_fold = 0
        pipeline = SiamesePipeline(encoder=encoder, head=head, hset=cfg.hset)
        pred = [predict_author(a, pipeline).label for a in test_authors]
        gold = [a.label for a in test_authors]
        per_fold.append(macro_f1(pred, gold, ds.label_set))
        s_per_fold.append(s_fold)

    return EvalReport(
        config=cfg.summary(),
        n=cfg.n_per_label if cfg.mode == "fewshot" and cfg.n_per_label else 0,
        s=float(np.mean(s_per_fold)),
        s_per_fold=s_per_fold,
        per_fold=per_fold,
        mean=mean_metrics(per_fold),
        std=std_metrics(per_fold),
    )


def sweep_shots(
    ds: LabeledDataset, ns: list[int], cfg: EvalConfig, seed: int, folds: int = 5
) -> list[EvalReport]:
    """One cross_validate per users-per-label count, with shared folds.

    Subsampling is independent per n (the n=16 sample is not a superset
    of the n=8 sample).
    """
    if not ns:
        raise ValidationError("ns must be non-empty")
    if list(ns) != sorted(ns):
        raise ValidationError("ns must be ascending")
    return [
        cross_validate(ds, folds, replace(cfg, mode="fewshot", n_per_label=n), seed) for n in ns
    ]


def sweep_hypotheses(
    ds: LabeledDataset,
    hsets: list[HypothesisSet],
    cfg: EvalConfig,
    seed: int,
    folds: int = 5,
    include_identity: bool = True,
) -> list[EvalReport]:
    """One cross_validate per hypothesis set over identical folds.

    The identity set is prepended by default unless an equivalent set is
    already present.  The best set is the one with the highest mean
    macro-F1 (see :func:`best_report`).
    """
    if not hsets:
        raise ValidationError("need at least one hypothesis set")
    hsets = list(hsets)
    if include_identity:
        identity_texts = list(ds.label_set)
        if not any([h.text for h in s.hypotheses] == identity_texts for s in hsets):
            from .entail import identity_hypotheses

            hsets.insert(0, identity_hypotheses(ds.label_set))
    return [cross_validate(ds, folds, replace(cfg, hset=hset), seed) for hset in hsets]


def best_report(reports: list[EvalReport]) -> int:
    """Index of the report with the highest mean macro-F1."""
    if not reports:
        raise ValidationError("no reports to compare")
    return int(np.argmax([r.mean.macro_f1 for r in reports]))


# ---------------------------------------------------------------------------
# Character n-gram logistic-regression baseline (user-level).
# ---------------------------------------------------------------------------


@dataclass
class LogisticModel:
    weights: np.ndarray  # (n_labels, hash_dim)
    bias: np.ndarray  # (n_labels,)
    label_set: list[str]

    def predict(self, X: np.ndarray) -> list[str]:
        scores = X @ self.weights.T + self.bias
        return [self.label_set[int(i)] for i in np.argmax(scores, axis=1)]


def lr_loss_and_grad(
    W: np.ndarray, b: np.ndarray, X: np.ndarray, Y: np.ndarray, l2: float
) -> tuple[float, np.ndarray, np.ndarray]:
    """Mean cross-entropy with L2 penalty on W, and its gradients.

    Y is one-hot (n_samples x n_labels); the bias is unregularized.
    """
    Z = X @ W.T + b
    Z -= Z.max(axis=1, keepdims=True)
    expZ = np.exp(Z)
    P = expZ / expZ.sum(axis=1, keepdims=True)
    n = X.shape[0]
    loss = float(-np.sum(Y * np.log(np.maximum(P, 1e-300))) / n + 0.5 * l2 * np.sum(W * W))
    dW = (P - Y).T @ X / n + l2 * W
    db = (P - Y).sum(axis=0) / n
    return loss, dW, db


def train_char_lr(
    train_authors: list[Author],
    label_set,
    encoder,
    l2: float = 1e-4,
    epochs: int = 200,
    lr: float = 0.5,
    seed: int = 0,
) -> tuple[LogisticModel, list[float]]:
    """Fit the user-level multinomial LR by full-batch gradient descent."""
    label_set = list(label_set)
    labels_present = {a.label for a in train_authors}
    if len(labels_present) < 2:
        raise ValidationError("training set contains a single class")
    docs = ["\n".join(a.texts) for a in train_authors]
    X = np.stack([encoder.embed(doc) for doc in docs])
    Y = np.zeros((len(train_authors), len(label_set)))
    for row, author in enumerate(train_authors):
        Y[row, label_set.index(author.label)] = 1.0
    rng = np.random.default_rng(seed)
    W = rng.normal(0.0, 0.01, size=(len(label_set), X.shape[1]))
    b = np.zeros(len(label_set))
    losses = []
    for _ in range(epochs):
        loss, dW, db = lr_loss_and_grad(W, b, X, Y, l2)
        W -= lr * dW
        b -= lr * db
        losses.append(loss)
    return LogisticModel(weights=W, bias=b, label_set=label_set), losses


def baseline_char_lr(
    train_authors: list[Author],
    test_authors: list[Author],
    label_set,
    n_range: tuple[int, int] = (1, 5),
    hash_dim: int = 4096,
    l2: float = 1e-4,
    epochs: int = 200,
    lr: float = 0.5,
    seed: int = 0,
) -> Metrics:
    """The char n-gram TF-IDF + logistic regression baseline.

    Each author's texts are concatenated into one document (a user-level
    model); the TF-IDF statistics are computed over all documents, train
    and test alike.
    """
    train_docs = ["\n".join(a.texts) for a in train_authors]
    test_docs = ["\n".join(a.texts) for a in test_authors]
    encoder = fit_encoder(train_docs + test_docs, n_range=n_range, hash_dim=hash_dim)
    model, _ = train_char_lr(
        train_authors, label_set, encoder, l2=l2, epochs=epochs, lr=lr, seed=seed
    )
    X_test = np.stack([encoder.embed(doc) for doc in test_docs])
    pred = model.predict(X_test)
    gold = [a.label for a in test_authors]
    return macro_f1(pred, gold, label_set)


# ---------------------------------------------------------------------------
# Report tables.
# ---------------------------------------------------------------------------

REPORT_COLUMNS = ("task", "model", "n", "selection", "s", "f1_mean", "f1_std", "acc_mean", "acc_std")


def report_rows(reports: list[EvalReport], task: str = "", model: str = "") -> list[dict]:
    """Flatten reports into table rows with the standard column layout."""
    rows = []
    for r in reports:
        sel = r.config.get("selection")
        if r.config.get("mode") == "zeroshot":
            selection = "-"
        elif sel is None:
            selection = "all"
        elif sel["method"] == "random":
            selection = f"Ra{sel['k']}"
        else:
            selection = "IS"
        rows.append(
            {
                "task": task,
                "model": model or r.config.get("hypotheses", ""),
                "n": r.n,
                "selection": selection,
                "s": r.s,
                "f1_mean": r.mean.macro_f1,
                "f1_std": r.std.macro_f1,
                "acc_mean": r.mean.accuracy,
                "acc_std": r.std.accuracy,
            }
        )
    return rows


def _format_cell(value) -> str:
    if isinstance(value, float):
        return f"{value:.6f}".rstrip("0").rstrip(".") if value == int(value) else f"{value:.4f}"
    return str(value)


def render_csv(rows: list[dict]) -> str:
    lines = [",".join(REPORT_COLUMNS)]
    for row in rows:
        lines.append(",".join(_format_cell(row[c]) for c in REPORT_COLUMNS))
    return "\n".join(lines) + "\n"


def render_markdown(rows: list[dict]) -> str:
    header = "| " + " | ".join(REPORT_COLUMNS) + " |"
    sep = "|" + "|".join(" --- " for _ in REPORT_COLUMNS) + "|"
    lines = [header, sep]
    for row in rows:
        lines.append("| " + " | ".join(_format_cell(row[c]) for c in REPORT_COLUMNS) + " |")
    return "\n".join(lines) + "\n"

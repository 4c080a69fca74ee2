"""Command-line entry point.

Subcommands: zeroshot, fewshot, sweep, select, baseline, report.  Every
run writes its fully resolved configuration, outputs, and a log into the
output directory; rerunning a command from that resolved config file
(``--config``) reproduces the reports and checkpoints byte for byte.

All randomness flows from a single ``--seed``, expanded per component by
hashing the component name together with the seed.  Exit codes: 0 on
success, 1 on validation errors, 2 on I/O errors.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from .corpus import LabeledDataset, load_dataset, stratified_kfold, subsample_users
from .embed import fit_encoder, load_embeddings
from .entail import (
    generate_pairs,
    identity_hypotheses,
    load_hypotheses,
    load_hypothesis_sets,
    load_pair_scores,
)
from .errors import ValidationError
from .evaluation import (
    EvalConfig,
    EvalReport,
    Metrics,
    baseline_char_lr,
    best_report,
    cross_validate,
    macro_f1,
    mean_metrics,
    render_csv,
    render_markdown,
    report_rows,
    select_training_texts,
    std_metrics,
)
from .hashing import derive_seed
from .profiling import SiamesePipeline, predict_author, predict_author_from_table
from .selection import SelectionConfig, select_instances
from .siamese import TrainConfig, init_head, save_head, train


def _dump_json(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True, ensure_ascii=False) + "\n"


def _atomic_write(path: Path, data: str) -> None:
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(data, encoding="utf-8", newline="\n")
    os.replace(tmp, path)


class _Parser(argparse.ArgumentParser):
    # Argparse's default error() exits with its own code; route usage
    # errors through the validation path instead.
    def error(self, message):
        raise ValidationError(message)


def _build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="authprof", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, *, data=True):
        p.add_argument("--config", help="resolved config JSON to rerun from")
        p.add_argument("--out", help="output directory")
        p.add_argument("--seed", type=int, help="run seed (default 0)")
        if data:
            p.add_argument("--data", help="dataset JSONL path")
            p.add_argument("--labels", help="comma-separated label order override")

    p = sub.add_parser("zeroshot", help="predict every author without training")
    common(p)
    p.add_argument("--hypotheses", help="hypothesis JSON (identity fallback if omitted)")
    p.add_argument("--embeddings", help="external embedding JSONL (replaces the built-in encoder)")
    p.add_argument("--pair-scores", dest="pair_scores", help="external entailment-probability JSONL")
    p.add_argument("--hash-dim", dest="hash_dim", type=int, help="built-in encoder buckets (default 4096)")

    p = sub.add_parser("fewshot", help="cross-validated few-shot training")
    common(p)
    p.add_argument("--hypotheses")
    p.add_argument("--folds", type=int, help="cross-validation folds (default 5)")
    p.add_argument("--n", type=int, help="training users per label (default: all)")
    p.add_argument("--select", choices=["random", "cluster"], help="instance selection method")
    p.add_argument("--k", type=int, help="random selection count (default 1)")
    p.add_argument("--threshold", type=float,
                   help="cluster distance threshold (default 1.5; ~0.5 suits the built-in encoder)")
    p.add_argument("--lr", type=float, help="head learning rate (default 0.1)")
    p.add_argument("--epochs", type=int, help="training epochs (default 10)")
    p.add_argument("--head-dim", dest="head_dim", type=int, help="projection dim (default 128)")
    p.add_argument("--hash-dim", dest="hash_dim", type=int)

    p = sub.add_parser("sweep", help="sweep users-per-label and/or hypothesis sets")
    common(p)
    p.add_argument("--hypotheses", help="hypothesis JSON; an array of named sets sweeps them")
    p.add_argument("--folds", type=int)
    p.add_argument("--ns", help="comma-separated users-per-label counts, e.g. 8,16,32")
    p.add_argument("--select", choices=["random", "cluster"])
    p.add_argument("--k", type=int)
    p.add_argument("--threshold", type=float)
    p.add_argument("--lr", type=float)
    p.add_argument("--epochs", type=int)
    p.add_argument("--head-dim", dest="head_dim", type=int)
    p.add_argument("--hash-dim", dest="hash_dim", type=int)

    p = sub.add_parser("select", help="emit per-author instance selections")
    common(p)
    p.add_argument("--select", "--method", dest="select", choices=["random", "cluster"])
    p.add_argument("--k", type=int)
    p.add_argument("--threshold", type=float)
    p.add_argument("--embeddings", help="external embedding JSONL for cluster selection")
    p.add_argument("--hash-dim", dest="hash_dim", type=int)

    p = sub.add_parser("baseline", help="cross-validated char n-gram logistic regression")
    common(p)
    p.add_argument("--folds", type=int)
    p.add_argument("--l2", type=float, help="L2 penalty (default 1e-4)")
    p.add_argument("--lr", type=float, help="learning rate (default 0.5)")
    p.add_argument("--epochs", type=int, help="epochs (default 200)")
    p.add_argument("--hash-dim", dest="hash_dim", type=int)

    p = sub.add_parser("report", help="merge report JSON files into one table")
    common(p, data=False)
    p.add_argument("--inputs", nargs="+", help="report.json files to merge")

    return parser


_DEFAULTS: dict[str, dict] = {
    "zeroshot": {
        "data": None, "labels": None, "hypotheses": None, "embeddings": None,
        "pair_scores": None, "seed": 0, "hash_dim": 4096, "n_range": [1, 5],
    },
    "fewshot": {
        "data": None, "labels": None, "hypotheses": None, "seed": 0, "folds": 5,
        "n": None, "select": "random", "k": 1, "threshold": 1.5, "lr": 0.1,
        "epochs": 10, "head_dim": 128, "hash_dim": 4096, "n_range": [1, 5],
    },
    "sweep": {
        "data": None, "labels": None, "hypotheses": None, "seed": 0, "folds": 5,
        "ns": None, "select": "random", "k": 1, "threshold": 1.5, "lr": 0.1,
        "epochs": 10, "head_dim": 128, "hash_dim": 4096, "n_range": [1, 5],
    },
    "select": {
        "data": None, "labels": None, "select": "cluster", "k": 1, "threshold": 1.5,
        "embeddings": None, "seed": 0, "hash_dim": 4096, "n_range": [1, 5],
    },
    "baseline": {
        "data": None, "labels": None, "seed": 0, "folds": 5, "l2": 1e-4,
        "lr": 0.5, "epochs": 200, "hash_dim": 4096, "n_range": [1, 5],
    },
    "report": {"inputs": None, "seed": 0},
}


def _resolve_params(command: str, args: argparse.Namespace) -> dict:
    """defaults < config file < explicitly passed CLI flags."""
    params = dict(_DEFAULTS[command])
    if args.config:
        try:
            with open(args.config, "r", encoding="utf-8") as fh:
                file_cfg = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ValidationError(f"{args.config}: malformed config: {exc}") from exc
        if not isinstance(file_cfg, dict):
            raise ValidationError(f"{args.config}: config must be a JSON object")
        file_command = file_cfg.pop("command", command)
        if file_command != command:
            raise ValidationError(
                f"config was written for {file_command!r}, not {command!r}"
            )
        unknown = set(file_cfg) - set(params)
        if unknown:
            raise ValidationError(f"unknown config keys: {sorted(unknown)}")
        params.update(file_cfg)
    for key in params:
        value = getattr(args, key, None)
        if value is not None:
            params[key] = value
    if command != "report" and not params.get("data"):
        raise ValidationError("--data is required")
    if command == "report" and not params.get("inputs"):
        raise ValidationError("--inputs is required")
    return params


def _load_data(params, log: list[str]) -> LabeledDataset:
    ds = load_dataset(params["data"])
    if params.get("labels"):
        order = [l.strip() for l in str(params["labels"]).split(",") if l.strip()]
        if len(set(order)) != len(order):
            raise ValidationError("duplicate labels in --labels")
        for a in ds.authors:
            if a.label is not None and a.label not in order:
                raise ValidationError(f"author {a.id!r} has label outside --labels: {a.label!r}")
        ds = LabeledDataset(authors=ds.authors, label_set=order, dropped_texts=ds.dropped_texts)
    log.append(f"loaded {len(ds.authors)} authors, labels {ds.label_set}")
    return ds


def _load_hset(params, label_set, log: list[str]):
    if params.get("hypotheses"):
        hset = load_hypotheses(params["hypotheses"], label_set)
        log.append(f"hypothesis set {hset.name!r}")
        return hset
    log.append("warning: no hypothesis file, falling back to identity hypotheses")
    return identity_hypotheses(label_set)


def _metrics_dict(m: Metrics) -> dict:
    return {
        "accuracy": m.accuracy,
        "macro_f1": m.macro_f1,
        "per_class_f1": dict(sorted(m.per_class_f1.items())),
    }


def _selection_config(params) -> SelectionConfig:
    return SelectionConfig(
        method=params["select"],
        k=params["k"],
        threshold=params["threshold"],
        seed=params["seed"],
    )


def _write_report_files(out: Path, reports: list[EvalReport], rows: list[dict], best: int | None):
    payload = {
        "reports": [r.to_dict() for r in reports],
        "rows": rows,
        "best_index": best,
        "std_convention": "population (divide by number of folds)",
    }
    _atomic_write(out / "report.json", _dump_json(payload))
    _atomic_write(out / "report.csv", render_csv(rows))
    _atomic_write(out / "report.md", render_markdown(rows))


def _cmd_zeroshot(params: dict, out: Path, log: list[str]) -> None:
    ds = _load_data(params, log)
    hset = _load_hset(params, ds.label_set, log)
    if params.get("pair_scores"):
        table = load_pair_scores(params["pair_scores"])
        log.append(f"scoring from pair-score table ({len(table)} entries)")
        results = [predict_author(a, table, ds.label_set) for a in ds.authors]
    elif params.get("embeddings"):
        table = load_embeddings(params["embeddings"])
        log.append(f"scoring from embedding table ({len(table)} vectors, dim {table.dim})")
        results = [predict_author_from_table(a, table, ds.label_set) for a in ds.authors]
    else:
        encoder = fit_encoder(
            ds.all_texts(), n_range=tuple(params["n_range"]), hash_dim=params["hash_dim"]
        )
        pipeline = SiamesePipeline(encoder=encoder, head=None, hset=hset)
        log.append("scoring with the built-in encoder (identity head)")
        results = [predict_author(a, pipeline) for a in ds.authors]

    lines = []
    for r in results:
        record = {
            "author_id": r.author_id,
            "label": r.label,
            "summed_scores": {
                label: float(score) for label, score in zip(ds.label_set, r.summed_scores)
            },
        }
        lines.append(json.dumps(record, sort_keys=True, ensure_ascii=False))
    _atomic_write(out / "predictions.jsonl", "\n".join(lines) + "\n")

    labeled = [(r.label, a.label) for r, a in zip(results, ds.authors) if a.label is not None]
    if labeled:
        pred, gold = zip(*labeled)
        m = macro_f1(list(pred), list(gold), ds.label_set)
        payload = _metrics_dict(m) | {"n_scored": len(labeled)}
        _atomic_write(out / "metrics.json", _dump_json(payload))
        log.append(f"macro_f1={m.macro_f1:.4f} accuracy={m.accuracy:.4f} over {len(labeled)} authors")
    else:
        log.append("no gold labels; skipped metrics.json")


def _cmd_fewshot(params: dict, out: Path, log: list[str]) -> None:
    ds = _load_data(params, log)
    hset = _load_hset(params, ds.label_set, log)
    cfg = EvalConfig(
        hset=hset,
        mode="fewshot",
        n_per_label=params["n"],
        selection=_selection_config(params),
        head_out_dim=params["head_dim"],
        epochs=params["epochs"],
        learning_rate=params["lr"],
        n_range=tuple(params["n_range"]),
        hash_dim=params["hash_dim"],
    )
    seed = params["seed"]
    report = cross_validate(ds, params["folds"], cfg, seed)
    rows = report_rows([report], model=hset.name)
    _write_report_files(out, [report], rows, best=0)
    log.append(
        f"cv mean macro_f1={report.mean.macro_f1:.4f} (std {report.std.macro_f1:.4f}), s={report.s}"
    )

    # Final checkpoint: the same configuration trained on the full dataset.
    encoder = fit_encoder(ds.all_texts(), n_range=cfg.n_range, hash_dim=cfg.hash_dim)
    train_ds = ds
    if cfg.n_per_label is not None:
        train_ds = subsample_users(ds, cfg.n_per_label, derive_seed(seed, "final:subsample"))
    selected = select_training_texts(
        train_ds.authors, encoder, cfg.selection, derive_seed(seed, "final:select")
    )
    pairs = generate_pairs(selected, hset)
    head = init_head(encoder.dim, cfg.head_out_dim, derive_seed(seed, "final:init"))
    head, losses = train(
        head,
        pairs,
        encoder,
        TrainConfig(epochs=cfg.epochs, learning_rate=cfg.learning_rate,
                    seed=derive_seed(seed, "final:train")),
        ds.label_set,
    )
    save_head(head, out / "checkpoint.json", seed=seed, epochs=cfg.epochs)
    log.append(f"checkpoint trained on {sum(len(a.texts) for a in selected)} texts, "
               f"final epoch loss {losses[-1]:.6f}")


def _cmd_sweep(params: dict, out: Path, log: list[str]) -> None:
    ds = _load_data(params, log)
    if params.get("hypotheses"):
        hsets = load_hypothesis_sets(params["hypotheses"], ds.label_set)
    else:
        hsets = [identity_hypotheses(ds.label_set)]
        log.append("warning: no hypothesis file, sweeping the identity set only")
    ns = None
    if params.get("ns"):
        ns = [int(x) for x in str(params["ns"]).split(",") if x.strip()]
        if ns != sorted(ns) or not ns:
            raise ValidationError("--ns must be a non-empty ascending list")

    seed = params["seed"]
    reports: list[EvalReport] = []
    models: list[str] = []
    for hset in hsets:
        base = EvalConfig(
            hset=hset,
            selection=_selection_config(params),
            head_out_dim=params["head_dim"],
            epochs=params["epochs"],
            learning_rate=params["lr"],
            n_range=tuple(params["n_range"]),
            hash_dim=params["hash_dim"],
        )
        if ns is None:
            reports.append(cross_validate(ds, params["folds"], replace(base, mode="zeroshot"), seed))
            models.append(hset.name)
        else:
            for n in ns:
                reports.append(
                    cross_validate(
                        ds, params["folds"], replace(base, mode="fewshot", n_per_label=n), seed
                    )
                )
                models.append(hset.name)
    rows = []
    for report, model in zip(reports, models):
        rows.extend(report_rows([report], model=model))
    best = best_report(reports)
    _write_report_files(out, reports, rows, best=best)
    log.append(f"{len(reports)} sweep rows; best row {best} ({models[best]!r}, "
               f"macro_f1={reports[best].mean.macro_f1:.4f})")


def _cmd_select(params: dict, out: Path, log: list[str]) -> None:
    ds = _load_data(params, log)
    cfg = _selection_config(params)
    encoder = None
    table = None
    if cfg.method == "cluster":
        if params.get("embeddings"):
            table = load_embeddings(params["embeddings"])
            log.append(f"clustering external embeddings (dim {table.dim})")
        else:
            encoder = fit_encoder(
                ds.all_texts(), n_range=tuple(params["n_range"]), hash_dim=params["hash_dim"]
            )
            log.append("clustering built-in encoder embeddings")
    lines = []
    for author in ds.authors:
        vectors = None
        if table is not None:
            vectors = [table.vector(author.id, i) for i in range(len(author.texts))]
        selected = select_instances(author, encoder, cfg, vectors=vectors)
        record = {
            "author_id": author.id,
            "selected": selected,
            "n_texts": len(author.texts),
            "n_clusters": len(selected) if cfg.method == "cluster" else None,
        }
        lines.append(json.dumps(record, sort_keys=True, ensure_ascii=False))
    _atomic_write(out / "selection.jsonl", "\n".join(lines) + "\n")
    log.append(f"selected instances for {len(ds.authors)} authors")


def _cmd_baseline(params: dict, out: Path, log: list[str]) -> None:
    ds = _load_data(params, log)
    seed = params["seed"]
    folds = stratified_kfold(ds, params["folds"], derive_seed(seed, "folds"))
    by_id = ds.by_id()
    per_fold = []
    s_per_fold = []
    for fold in folds:
        train_authors = [by_id[i] for i in fold.train_ids]
        test_authors = [by_id[i] for i in fold.test_ids]
        m = baseline_char_lr(
            train_authors,
            test_authors,
            ds.label_set,
            n_range=tuple(params["n_range"]),
            hash_dim=params["hash_dim"],
            l2=params["l2"],
            epochs=params["epochs"],
            lr=params["lr"],
            seed=derive_seed(seed, f"lr:fold{fold.fold_index}"),
        )
        per_fold.append(m)
        s_per_fold.append(len(train_authors))
    report = EvalReport(
        config={
            "mode": "baseline",
            "model": "user-char-lr",
            "l2": params["l2"],
            "lr": params["lr"],
            "epochs": params["epochs"],
            "hash_dim": params["hash_dim"],
        },
        n=0,
        s=float(np.mean(s_per_fold)),
        s_per_fold=s_per_fold,
        per_fold=per_fold,
        mean=mean_metrics(per_fold),
        std=std_metrics(per_fold),
    )
    rows = report_rows([report], model="user-char-lr")
    for row in rows:
        row["n"] = "all"
        row["selection"] = "all"
    _write_report_files(out, [report], rows, best=0)
    log.append(f"baseline mean macro_f1={report.mean.macro_f1:.4f}")


def _cmd_report(params: dict, out: Path, log: list[str]) -> None:
    rows = []
    for path in params["inputs"]:
        with open(path, "r", encoding="utf-8") as fh:
            payload = json.load(fh)
        if "rows" not in payload:
            raise ValidationError(f"{path}: not a report.json (no 'rows')")
        rows.extend(payload["rows"])
        log.append(f"merged {len(payload['rows'])} rows from {path}")
    _atomic_write(out / "combined.csv", render_csv(rows))
    _atomic_write(out / "combined.md", render_markdown(rows))


_COMMANDS = {
    "zeroshot": _cmd_zeroshot,
    "fewshot": _cmd_fewshot,
    "sweep": _cmd_sweep,
    "select": _cmd_select,
    "baseline": _cmd_baseline,
    "report": _cmd_report,
}


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        params = _resolve_params(args.command, args)
        if not args.out:
            raise ValidationError("--out is required")
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        log: list[str] = [f"command: {args.command}"]
        _COMMANDS[args.command](params, out, log)
        resolved = {"command": args.command} | params
        _atomic_write(out / "resolved_config.json", _dump_json(resolved))
        _atomic_write(out / "log.txt", "\n".join(log) + "\n")
        return 0
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 2


def console_main() -> None:
    sys.exit(main())


if __name__ == "__main__":
    console_main()

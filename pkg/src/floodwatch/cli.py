"""Command-line entry point.

Subcommands: ingest, featurize, train, predict, evaluate, run.  Exit code is
0 on success; failures print a one-line machine-readable error to stderr and
exit nonzero.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import runs
from .config import ConfigError, load_config
from .corpus import load_dataset, stratified_split
from .evaluation import format_report, macro_f1, report_line, score_binary
from .features import bow_matrix, build_vocabulary, save_feature_file
from .textprep import load_stopwords, preprocess


def _error_line(exc: BaseException) -> str:
    return f"error={type(exc).__name__} message={json.dumps(str(exc))}"


def _load_run_config(args: argparse.Namespace):
    cfg = load_config(args.config)
    if args.preset is not None:
        from dataclasses import replace

        cfg = replace(cfg, preset=args.preset)
        if cfg.preset in ("run4", "run5") and not cfg.image_features:
            raise ConfigError(f"preset {cfg.preset!r} requires 'image_features'")
    return cfg


def _cmd_ingest(args: argparse.Namespace) -> int:
    ds = load_dataset(args.dataset, args.format)
    unlabeled = sum(1 for rec in ds if rec.label is None)
    with_images = sum(1 for rec in ds if rec.image_refs)
    print(
        f"records={len(ds)} positive={ds.positive_count} negative={ds.negative_count}"
        f" unlabeled={unlabeled} with_images={with_images}"
    )
    return 0


def _cmd_featurize(args: argparse.Namespace) -> int:
    ds = load_dataset(args.dataset, args.format)
    stopword_set = load_stopwords(args.stopwords)
    docs = [preprocess(rec.text, stopword_set) for rec in ds]
    vocab = build_vocabulary(docs, args.min_count)
    fm = bow_matrix(docs, ds.ids(), vocab)
    save_feature_file(fm, args.out)
    print(f"wrote {args.out}: rows={len(fm)} dim={fm.dim}")
    return 0


def _cmd_train(args: argparse.Namespace) -> int:
    cfg = _load_run_config(args)
    stopword_set = load_stopwords(cfg.stopwords)
    train_ds = load_dataset(cfg.train, cfg.dataset_format)
    if cfg.dev_fraction is not None:
        train_ds, _ = stratified_split(train_ds, cfg.dev_fraction, cfg.seed)
    members = runs.train_members(cfg, train_ds, stopword_set)
    out_dir = cfg.output_dir / f"{cfg.preset}_members"
    runs.save_members(members, out_dir)
    print(f"trained members {','.join(members.names)} -> {out_dir}")
    return 0


def _cmd_predict(args: argparse.Namespace) -> int:
    cfg = _load_run_config(args)
    stopword_set = load_stopwords(cfg.stopwords)
    members = runs.load_members(cfg, cfg.output_dir / f"{cfg.preset}_members", stopword_set)
    if args.split == "dev":
        if cfg.dev is not None:
            ds = load_dataset(cfg.dev, cfg.dataset_format)
        elif cfg.dev_fraction is not None:
            full = load_dataset(cfg.train, cfg.dataset_format)
            _, ds = stratified_split(full, cfg.dev_fraction, cfg.seed)
        else:
            raise ConfigError("no dev split configured: set 'dev' or 'dev_fraction'")
    else:
        if cfg.test is None:
            raise ConfigError("no test split configured: set 'test'")
        ds = load_dataset(cfg.test, cfg.dataset_format)
    fused, _ = runs.predict_posteriors(members, ds)
    path = cfg.output_dir / f"{cfg.preset}_{args.split}_predictions.tsv"
    runs.write_predictions(path, ds, fused, cfg)
    print(f"wrote {path}")
    report = runs._score_split(ds, fused)
    if report is not None:
        print(report_line(report, preset=cfg.preset, split=args.split, seed=cfg.seed))
    return 0


def _cmd_evaluate(args: argparse.Namespace) -> int:
    ds = load_dataset(args.dataset, args.format)
    predictions = runs.read_predictions(args.predictions)
    predicted = {rid: label for rid, _, label in predictions}
    missing = [rec.id for rec in ds if rec.id not in predicted]
    if missing:
        raise ValueError(f"predictions missing for {len(missing)} record(s), e.g. {missing[0]!r}")
    labels = ds.require_labels()
    preds = [predicted[rec.id] for rec in ds]
    report = score_binary(labels, preds)
    print(format_report(report))
    extra = {}
    if args.macro:
        extra["macro_f1"] = format(macro_f1(labels, preds), ".9g")
    print(report_line(report, **extra))
    return 0


def _cmd_run(args: argparse.Namespace) -> int:
    cfg = _load_run_config(args)
    result = runs.execute_run(cfg)
    for split, path in result.prediction_files.items():
        print(f"predictions[{split}]: {path}")
    for split, report in result.reports.items():
        print(f"--- {split} ---")
        print(format_report(report))
        print(result.report_lines[split])
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="floodwatch",
        description="Classify flood-event relevance of social posts from text and image features.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="validate a dataset file and print its stats")
    p.add_argument("dataset", type=Path)
    p.add_argument("--format", choices=["csv", "jsonlines"], default=None)
    p.set_defaults(func=_cmd_ingest)

    p = sub.add_parser("featurize", help="build a bag-of-words feature file from a dataset")
    p.add_argument("--dataset", type=Path, required=True)
    p.add_argument("--out", type=Path, required=True)
    p.add_argument("--format", choices=["csv", "jsonlines"], default=None)
    p.add_argument("--min-count", dest="min_count", type=int, default=1)
    p.add_argument("--stopwords", type=Path, default=None)
    p.set_defaults(func=_cmd_featurize)

    p = sub.add_parser("train", help="train the preset's members and persist them")
    p.add_argument("--config", type=Path, required=True)
    p.add_argument("--preset", choices=list(runs.PRESET_MEMBERS) + ["custom"], default=None)
    p.set_defaults(func=_cmd_train)

    p = sub.add_parser("predict", help="predict a split with previously trained members")
    p.add_argument("--config", type=Path, required=True)
    p.add_argument("--preset", choices=list(runs.PRESET_MEMBERS) + ["custom"], default=None)
    p.add_argument("--split", choices=["dev", "test"], required=True)
    p.set_defaults(func=_cmd_predict)

    p = sub.add_parser("evaluate", help="score a prediction file against a labeled dataset")
    p.add_argument("--predictions", type=Path, required=True)
    p.add_argument("--dataset", type=Path, required=True)
    p.add_argument("--format", choices=["csv", "jsonlines"], default=None)
    p.add_argument("--macro", action="store_true", help="also report macro-averaged F1")
    p.set_defaults(func=_cmd_evaluate)

    p = sub.add_parser("run", help="train, predict, and score one preset end to end")
    p.add_argument("--config", type=Path, required=True)
    p.add_argument("--preset", choices=list(runs.PRESET_MEMBERS) + ["custom"], default=None)
    p.set_defaults(func=_cmd_run)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except Exception as exc:  # noqa: BLE001 - single reporting point for the CLI
        sys.stderr.write(_error_line(exc) + "\n")
        return 1


if __name__ == "__main__":
    sys.exit(main())

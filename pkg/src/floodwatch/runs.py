"""End-to-end run execution for the five presets.

A run trains its member models on the train split (optionally rebalanced with
SMOTE), scores every evaluation split, fuses member posteriors per record,
and writes one prediction file per split.  Everything downstream of the
config is a deterministic function of (dataset bytes, config, seed).

Preset composition:

* run1 - bag-of-words counts into naive Bayes
* run2 - dense text embeddings into logistic regression
* run3 - run1 and run2 fused with equal weights
* run4 - one calibrated linear SVM per image feature file, fused equally
* run5 - the run1 member fused equally with the run4 ensemble

Text embeddings come from ``text_features`` when configured, otherwise from
the built-in deterministic hash embedder, so no external encoder is needed.
Records that appear in no image feature file fall back to the training label
prior when only image members are active.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from .balance import rebalance
from .config import RunConfig
from .corpus import Dataset, load_dataset, stratified_split
from .evaluation import EvalReport, report_line, score_binary
from .features import (
    FeatureMatrix,
    Vocabulary,
    align_features,
    bow_matrix,
    bow_vectorize,
    build_vocabulary,
    hash_embed,
    hash_embed_matrix,
    load_feature_file,
    load_vocabulary,
    save_vocabulary,
    standardize_apply,
    standardize_fit,
)
from .fusion import FusionSpec, decide, fuse, fuse_multimodal
from .models import (
    LRModel,
    NBModel,
    PosteriorPair,
    SVMModel,
    load_model,
    lr_predict,
    lr_train,
    nb_predict,
    nb_train,
    save_model,
    svm_predict,
    svm_train,
)
from .textprep import load_stopwords, preprocess

PRESET_MEMBERS: dict[str, tuple[str, ...]] = {
    "run1": ("bow_nb",),
    "run2": ("emb_lr",),
    "run3": ("bow_nb", "emb_lr"),
    "run4": ("images",),
    "run5": ("bow_nb", "images"),
}

Scaler = tuple[np.ndarray, np.ndarray]


@dataclass(frozen=True)
class ImageMember:
    name: str
    model: SVMModel
    features: FeatureMatrix
    scaler: Scaler | None


@dataclass(frozen=True)
class TrainedMembers:
    """Everything needed to score new records for one preset."""

    names: tuple[str, ...]
    stopword_set: frozenset[str]
    vocab: Vocabulary | None
    nb: NBModel | None
    lr: LRModel | None
    lr_scaler: Scaler | None
    text_features: FeatureMatrix | None  # None means hash embedding
    hash_dim: int
    hash_seed: int
    svms: tuple[ImageMember, ...]
    prior: PosteriorPair


@dataclass
class RunResult:
    preset: str
    reports: dict[str, EvalReport]
    report_lines: dict[str, str]
    prediction_files: dict[str, Path]
    posteriors: dict[str, list[PosteriorPair]]
    member_posteriors: dict[str, dict[str, list[PosteriorPair | None]]]


def _maybe_rebalance(
    fm: FeatureMatrix, labels: list[int], cfg: RunConfig
) -> tuple[FeatureMatrix, list[int]]:
    if cfg.smote == "off":
        return fm, labels
    return rebalance(
        fm, labels, mode=cfg.smote, factor=cfg.smote_factor, k=cfg.smote_k, seed=cfg.seed
    )


def _scaled(fm: FeatureMatrix, scaler: Scaler | None) -> FeatureMatrix:
    if scaler is None:
        return fm
    return FeatureMatrix(fm.ids, standardize_apply(fm.rows, scaler))


def train_members(cfg: RunConfig, train_ds: Dataset, stopword_set: frozenset[str]) -> TrainedMembers:
    """Train every member the preset needs on the given training split."""
    names = cfg.members if cfg.preset == "custom" else PRESET_MEMBERS[cfg.preset]
    labels = train_ds.require_labels()
    ids = train_ds.ids()
    docs = None
    if "bow_nb" in names or ("emb_lr" in names and cfg.text_features is None):
        docs = [preprocess(rec.text, stopword_set) for rec in train_ds]

    vocab = nb = None
    if "bow_nb" in names:
        vocab = build_vocabulary(docs, cfg.min_count)
        counts = bow_matrix(docs, ids, vocab)
        counts, y = _maybe_rebalance(counts, labels, cfg)
        nb = nb_train(counts, y, cfg.nb_alpha)

    lr = lr_scaler = text_features = None
    if "emb_lr" in names:
        if cfg.text_features is not None:
            text_features = load_feature_file(cfg.text_features)
            embedded = align_features(train_ds, text_features)
        else:
            embedded = hash_embed_matrix(docs, ids, cfg.hash_dim, cfg.seed)
        if cfg.standardize:
            lr_scaler = standardize_fit(embedded.rows)
            embedded = _scaled(embedded, lr_scaler)
        embedded, y = _maybe_rebalance(embedded, labels, cfg)
        lr = lr_train(embedded, y, cfg.learning_rate, cfg.lr_epochs, cfg.l2, cfg.seed)

    svms: list[ImageMember] = []
    if "images" in names:
        for idx, path in enumerate(cfg.image_features):
            file_fm = load_feature_file(path)
            keep = [i for i, rid in enumerate(ids) if rid in file_fm]
            if not keep:
                raise ValueError(f"image feature file {path} covers no training record")
            sub = FeatureMatrix(
                tuple(ids[i] for i in keep),
                np.vstack([file_fm.row(ids[i]) for i in keep]),
            )
            sub_labels = [labels[i] for i in keep]
            scaler = standardize_fit(sub.rows) if cfg.standardize else None
            sub = _scaled(sub, scaler)
            sub, y = _maybe_rebalance(sub, sub_labels, cfg)
            model = svm_train(sub, y, cfg.svm_lambda, cfg.svm_epochs, cfg.seed)
            svms.append(ImageMember(f"svm_{idx}", model, file_fm, scaler))

    n = len(labels)
    n_pos = sum(labels)
    prior = PosteriorPair((n - n_pos) / n, n_pos / n)
    return TrainedMembers(
        names=tuple(names),
        stopword_set=stopword_set,
        vocab=vocab,
        nb=nb,
        lr=lr,
        lr_scaler=lr_scaler,
        text_features=text_features,
        hash_dim=cfg.hash_dim,
        hash_seed=cfg.seed,
        svms=tuple(svms),
        prior=prior,
    )


def _image_ensemble_posterior(members: TrainedMembers, record_id: str) -> PosteriorPair | None:
    posteriors = []
    for member in members.svms:
        if record_id in member.features:
            row = member.features.row(record_id)
            if member.scaler is not None:
                row = standardize_apply(row, member.scaler)
            posteriors.append(svm_predict(member.model, row))
    if not posteriors:
        return None
    return fuse(posteriors)


def predict_posteriors(
    members: TrainedMembers, ds: Dataset
) -> tuple[list[PosteriorPair], dict[str, list[PosteriorPair | None]]]:
    """Fused and per-member posteriors for every record, in dataset order."""
    per_member: dict[str, list[PosteriorPair | None]] = {name: [] for name in members.names}
    fused: list[PosteriorPair] = []
    for rec in ds:
        tokens = None
        text_posteriors: list[PosteriorPair] = []
        text_names: list[str] = []
        if "bow_nb" in members.names:
            tokens = preprocess(rec.text, members.stopword_set)
            p = nb_predict(members.nb, bow_vectorize(tokens, members.vocab))
            per_member["bow_nb"].append(p)
            text_posteriors.append(p)
            text_names.append("bow_nb")
        if "emb_lr" in members.names:
            if members.text_features is not None:
                if rec.id not in members.text_features:
                    raise ValueError(f"text feature file has no row for id {rec.id!r}")
                row = members.text_features.row(rec.id)
            else:
                if tokens is None:
                    tokens = preprocess(rec.text, members.stopword_set)
                row = hash_embed(tokens, members.hash_dim, members.hash_seed)
            if members.lr_scaler is not None:
                row = standardize_apply(row, members.lr_scaler)
            p = lr_predict(members.lr, row)
            per_member["emb_lr"].append(p)
            text_posteriors.append(p)
            text_names.append("emb_lr")

        image_p = None
        if "images" in members.names:
            image_p = _image_ensemble_posterior(members, rec.id)
            per_member["images"].append(image_p)

        if "images" in members.names:
            if text_posteriors:
                spec = FusionSpec.equal([*text_names, "images"])
                fused.append(fuse_multimodal(text_posteriors, image_p, spec))
            else:
                # image-only preset: no modality available, fall back to the
                # training label prior
                fused.append(image_p if image_p is not None else members.prior)
        else:
            fused.append(fuse(text_posteriors))
    return fused, per_member


def write_predictions(
    path: Path, ds: Dataset, posteriors: Sequence[PosteriorPair], cfg: RunConfig
) -> None:
    """One ``<id><TAB><p_pos><TAB><label>`` line per record, with a config stamp."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(f"# preset={cfg.preset} seed={cfg.seed} config={cfg.config_hash()}\n")
        for rec, p in zip(ds, posteriors):
            if any(c in rec.id for c in "\t\r\n"):
                raise ValueError(f"id {rec.id!r} cannot be serialized in the prediction format")
            fh.write(f"{rec.id}\t{format(p.p_pos, '.9g')}\t{decide(p)}\n")


def read_predictions(path: str | Path) -> list[tuple[str, float, int]]:
    out = []
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        if not line.strip() or line.startswith("#"):
            continue
        rid, p_pos, label = line.split("\t")
        out.append((rid, float(p_pos), int(label)))
    return out


def _score_split(ds: Dataset, posteriors: Sequence[PosteriorPair]) -> EvalReport | None:
    if any(rec.label is None for rec in ds):
        return None
    return score_binary([rec.label for rec in ds], [decide(p) for p in posteriors])


def _cv_assignments(ds: Dataset, folds: int, seed: int) -> list[int]:
    # Per class, ids are ranked by a seeded hash and dealt round-robin so fold
    # membership depends only on (ids, seed).
    labels = ds.require_labels()
    by_class: dict[int, list[str]] = {}
    for rec, label in zip(ds.records, labels):
        by_class.setdefault(label, []).append(rec.id)
    fold_of: dict[str, int] = {}
    for members in by_class.values():
        if len(members) < folds:
            raise ValueError(
                f"cannot make {folds} folds from a class with {len(members)} member(s)"
            )
        ranked = sorted(
            members,
            key=lambda rid: hashlib.sha256(f"{seed}\x00{rid}".encode("utf-8")).hexdigest(),
        )
        for rank, rid in enumerate(ranked):
            fold_of[rid] = rank % folds
    return [fold_of[rec.id] for rec in ds.records]


def execute_run(cfg: RunConfig) -> RunResult:
    """Train, predict, score, and write outputs for one configured run.

    Partially written prediction files are removed if anything fails.
    """
    stopword_set = load_stopwords(cfg.stopwords)
    train_ds = load_dataset(cfg.train, cfg.dataset_format)
    eval_splits: dict[str, Dataset] = {}
    if cfg.dev is not None:
        eval_splits["dev"] = load_dataset(cfg.dev, cfg.dataset_format)
    elif cfg.dev_fraction is not None:
        train_ds, dev_ds = stratified_split(train_ds, cfg.dev_fraction, cfg.seed)
        eval_splits["dev"] = dev_ds
    if cfg.test is not None:
        eval_splits["test"] = load_dataset(cfg.test, cfg.dataset_format)
    if not eval_splits and cfg.cv_folds is None:
        raise ValueError("nothing to evaluate: configure 'dev', 'dev_fraction', 'cv_folds', or 'test'")

    cfg.output_dir.mkdir(parents=True, exist_ok=True)
    written: list[Path] = []
    result = RunResult(cfg.preset, {}, {}, {}, {}, {})
    try:
        if cfg.cv_folds is not None:
            _run_cross_validation(cfg, train_ds, stopword_set, result, written)
        members = train_members(cfg, train_ds, stopword_set) if eval_splits else None
        for split, ds in eval_splits.items():
            fused, per_member = predict_posteriors(members, ds)
            path = cfg.output_dir / f"{cfg.preset}_{split}_predictions.tsv"
            write_predictions(path, ds, fused, cfg)
            written.append(path)
            result.prediction_files[split] = path
            result.posteriors[split] = fused
            result.member_posteriors[split] = per_member
            report = _score_split(ds, fused)
            if report is not None:
                result.reports[split] = report
                result.report_lines[split] = report_line(
                    report, preset=cfg.preset, split=split, seed=cfg.seed
                )
    except BaseException:
        for path in written:
            path.unlink(missing_ok=True)
        raise
    return result


def _run_cross_validation(
    cfg: RunConfig,
    train_ds: Dataset,
    stopword_set: frozenset[str],
    result: RunResult,
    written: list[Path],
) -> None:
    folds = _cv_assignments(train_ds, cfg.cv_folds, cfg.seed)
    posteriors: dict[str, PosteriorPair] = {}
    for fold in range(cfg.cv_folds):
        fit_ds = Dataset(tuple(r for r, f in zip(train_ds.records, folds) if f != fold))
        held_ds = Dataset(tuple(r for r, f in zip(train_ds.records, folds) if f == fold))
        members = train_members(cfg, fit_ds, stopword_set)
        fused, _ = predict_posteriors(members, held_ds)
        posteriors.update({rec.id: p for rec, p in zip(held_ds, fused)})
    ordered = [posteriors[rec.id] for rec in train_ds]
    path = cfg.output_dir / f"{cfg.preset}_cv_predictions.tsv"
    write_predictions(path, train_ds, ordered, cfg)
    written.append(path)
    result.prediction_files["cv"] = path
    result.posteriors["cv"] = ordered
    report = _score_split(train_ds, ordered)
    if report is not None:
        result.reports["cv"] = report
        result.report_lines["cv"] = report_line(
            report, preset=cfg.preset, split="cv", seed=cfg.seed, folds=cfg.cv_folds
        )


# ---------------------------------------------------------------------------
# Member persistence for the separate train/predict commands


def _scaler_to_matrix(scaler: Scaler) -> FeatureMatrix:
    mean, std = scaler
    return FeatureMatrix(("mean", "std"), np.vstack([mean, std]))


def _scaler_from_matrix(fm: FeatureMatrix) -> Scaler:
    return fm.row("mean"), fm.row("std")


def save_members(members: TrainedMembers, out_dir: Path) -> None:
    """Persist trained state so ``predict`` can run in a later process."""
    out_dir.mkdir(parents=True, exist_ok=True)
    from .features import save_feature_file  # local to avoid a wide import list

    manifest = [
        f"members={','.join(members.names)}",
        f"hash_dim={members.hash_dim}",
        f"hash_seed={members.hash_seed}",
        f"prior_pos={format(members.prior.p_pos, '.17g')}",
        f"image_members={len(members.svms)}",
    ]
    if members.vocab is not None:
        save_vocabulary(members.vocab, out_dir / "vocab.txt")
        save_model(members.nb, out_dir / "nb.model")
    if members.lr is not None:
        save_model(members.lr, out_dir / "lr.model")
        if members.lr_scaler is not None:
            save_feature_file(_scaler_to_matrix(members.lr_scaler), out_dir / "lr_scaler.tsv")
    for idx, member in enumerate(members.svms):
        save_model(member.model, out_dir / f"svm_{idx}.model")
        if member.scaler is not None:
            save_feature_file(_scaler_to_matrix(member.scaler), out_dir / f"svm_{idx}_scaler.tsv")
    (out_dir / "members.txt").write_text("\n".join(manifest) + "\n", encoding="utf-8")


def load_members(cfg: RunConfig, out_dir: Path, stopword_set: frozenset[str]) -> TrainedMembers:
    manifest_path = out_dir / "members.txt"
    if not manifest_path.exists():
        raise FileNotFoundError(f"no trained members at {out_dir}; run 'train' first")
    manifest = dict(
        line.split("=", 1)
        for line in manifest_path.read_text(encoding="utf-8").splitlines()
        if line.strip()
    )
    names = tuple(manifest["members"].split(","))
    vocab = nb = lr = lr_scaler = text_features = None
    if "bow_nb" in names:
        vocab = load_vocabulary(out_dir / "vocab.txt")
        nb = load_model(out_dir / "nb.model")
    if "emb_lr" in names:
        lr = load_model(out_dir / "lr.model")
        scaler_path = out_dir / "lr_scaler.tsv"
        if scaler_path.exists():
            lr_scaler = _scaler_from_matrix(load_feature_file(scaler_path))
        if cfg.text_features is not None:
            text_features = load_feature_file(cfg.text_features)
    svms = []
    for idx in range(int(manifest["image_members"])):
        model = load_model(out_dir / f"svm_{idx}.model")
        scaler_path = out_dir / f"svm_{idx}_scaler.tsv"
        scaler = _scaler_from_matrix(load_feature_file(scaler_path)) if scaler_path.exists() else None
        svms.append(ImageMember(f"svm_{idx}", model, load_feature_file(cfg.image_features[idx]), scaler))
    prior_pos = float(manifest["prior_pos"])
    return TrainedMembers(
        names=names,
        stopword_set=stopword_set,
        vocab=vocab,
        nb=nb,
        lr=lr,
        lr_scaler=lr_scaler,
        text_features=text_features,
        hash_dim=int(manifest["hash_dim"]),
        hash_seed=int(manifest["hash_seed"]),
        svms=tuple(svms),
        prior=PosteriorPair(1.0 - prior_pos, prior_pos),
    )

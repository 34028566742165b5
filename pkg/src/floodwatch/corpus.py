"""Labeled tweet datasets: loading, validation, saving, and stratified splitting.

Datasets are immutable after load and therefore safe to share across threads.
Loading is single-threaded and preserves file order.
"""

from __future__ import annotations

import csv
import hashlib
import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

NOT_RELEVANT = 0
RELEVANT = 1

_CSV_HEADER = ["id", "text", "images", "label"]


class DatasetError(ValueError):
    """Base class for dataset loading and validation failures."""


class ParseError(DatasetError):
    """A row or line of a dataset file could not be parsed."""


class ValidationError(DatasetError):
    """Parsed content violates a dataset invariant."""


@dataclass(frozen=True)
class TweetRecord:
    """One social-media post: id, text, optional image paths, optional label."""

    id: str
    text: str
    image_refs: tuple[str, ...] = ()
    label: int | None = None

    def __post_init__(self) -> None:
        if not isinstance(self.id, str) or not self.id:
            raise ValidationError("record id must be a nonempty string")
        if self.label is not None and self.label not in (0, 1):
            raise ValidationError(f"label must be 0 or 1, got {self.label!r}")


@dataclass(frozen=True)
class Dataset:
    """An ordered, immutable collection of records with unique ids."""

    records: tuple[TweetRecord, ...]
    _by_id: dict[str, TweetRecord] = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        by_id: dict[str, TweetRecord] = {}
        for rec in self.records:
            if rec.id in by_id:
                raise ValidationError(f"duplicate record id {rec.id!r}")
            by_id[rec.id] = rec
        object.__setattr__(self, "_by_id", by_id)

    def __len__(self) -> int:
        return len(self.records)

    def __iter__(self):
        return iter(self.records)

    def __contains__(self, record_id: str) -> bool:
        return record_id in self._by_id

    def get(self, record_id: str) -> TweetRecord:
        return self._by_id[record_id]

    def ids(self) -> list[str]:
        return [rec.id for rec in self.records]

    @property
    def positive_count(self) -> int:
        return sum(1 for rec in self.records if rec.label == RELEVANT)

    @property
    def negative_count(self) -> int:
        return sum(1 for rec in self.records if rec.label == NOT_RELEVANT)

    def require_labels(self) -> list[int]:
        """Labels of all records, failing if any record is unlabeled."""
        labels = []
        for rec in self.records:
            if rec.label is None:
                raise ValidationError(
                    f"record {rec.id!r} has no label; this operation requires labeled data"
                )
            labels.append(rec.label)
        return labels


def _infer_format(path: Path) -> str:
    suffix = path.suffix.lower()
    if suffix == ".csv":
        return "csv"
    if suffix in (".jsonl", ".jsonlines", ".ndjson", ".json"):
        return "jsonlines"
    raise DatasetError(
        f"cannot infer dataset format from {path.name!r}; pass format='csv' or 'jsonlines'"
    )


def _parse_label(value, where: str) -> int | None:
    if value is None:
        return None
    if isinstance(value, bool) or value not in (0, 1):
        raise ParseError(f"{where}: label must be 0 or 1, got {value!r}")
    return int(value)


def _records_from_jsonlines(path: Path) -> list[TweetRecord]:
    records = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ParseError(f"line {lineno}: invalid JSON ({exc.msg})") from exc
            if not isinstance(obj, dict):
                raise ParseError(f"line {lineno}: expected a JSON object")
            rec_id = obj.get("id")
            text = obj.get("text")
            if not isinstance(rec_id, str) or not rec_id:
                raise ParseError(f"line {lineno}: missing or empty 'id'")
            if not isinstance(text, str):
                raise ParseError(f"line {lineno}: missing 'text'")
            images = obj.get("images", [])
            if not isinstance(images, list) or not all(isinstance(p, str) for p in images):
                raise ParseError(f"line {lineno}: 'images' must be an array of strings")
            label = _parse_label(obj.get("label"), f"line {lineno}")
            records.append(TweetRecord(rec_id, text, tuple(images), label))
    return records


def _records_from_csv(path: Path) -> list[TweetRecord]:
    records = []
    with open(path, encoding="utf-8-sig", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ParseError("line 1: missing CSV header") from None
        if [h.strip() for h in header] != _CSV_HEADER:
            raise ParseError(
                f"line 1: expected header {','.join(_CSV_HEADER)!r}, got {','.join(header)!r}"
            )
        for row in reader:
            lineno = reader.line_num
            if not row:
                continue
            if len(row) != len(_CSV_HEADER):
                raise ParseError(f"line {lineno}: expected {len(_CSV_HEADER)} cells, got {len(row)}")
            rec_id, text, images_cell, label_cell = row
            if not rec_id:
                raise ParseError(f"line {lineno}: missing or empty 'id'")
            if text == "":
                raise ParseError(f"line {lineno}: missing 'text'")
            images = tuple(p for p in images_cell.split(";") if p) if images_cell else ()
            if label_cell == "":
                label = None
            elif label_cell in ("0", "1"):
                label = int(label_cell)
            else:
                raise ParseError(f"line {lineno}: label must be 0 or 1, got {label_cell!r}")
            records.append(TweetRecord(rec_id, text, images, label))
    return records


def load_dataset(path: str | Path, fmt: str | None = None) -> Dataset:
    """Load a dataset file in ``csv`` or ``jsonlines`` format.

    ``fmt=None`` infers the format from the file extension.  Raises
    :class:`ParseError` for malformed rows (naming the line) and
    :class:`ValidationError` for duplicate ids.
    """
    path = Path(path)
    if not path.exists():
        raise DatasetError(f"dataset file not found: {path}")
    fmt = fmt or _infer_format(path)
    if fmt == "jsonlines":
        records = _records_from_jsonlines(path)
    elif fmt == "csv":
        records = _records_from_csv(path)
    else:
        raise DatasetError(f"unknown dataset format {fmt!r}; expected 'csv' or 'jsonlines'")
    return Dataset(tuple(records))


def save_dataset(ds: Dataset, path: str | Path, fmt: str | None = None) -> None:
    """Write a dataset back to disk; ``load_dataset`` reproduces it exactly."""
    path = Path(path)
    fmt = fmt or _infer_format(path)
    if fmt == "jsonlines":
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            for rec in ds:
                obj: dict = {"id": rec.id, "text": rec.text}
                if rec.image_refs:
                    obj["images"] = list(rec.image_refs)
                if rec.label is not None:
                    obj["label"] = rec.label
                fh.write(json.dumps(obj, ensure_ascii=False) + "\n")
    elif fmt == "csv":
        with open(path, "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(_CSV_HEADER)
            for rec in ds:
                label = "" if rec.label is None else str(rec.label)
                writer.writerow([rec.id, rec.text, ";".join(rec.image_refs), label])
    else:
        raise DatasetError(f"unknown dataset format {fmt!r}; expected 'csv' or 'jsonlines'")


def dev_count(class_size: int, dev_fraction: float) -> int:
    """Dev-set size for one class: round-half-up of size*fraction, floor of 1.

    Computed on the exact binary value of ``dev_fraction`` so the result is
    platform independent.
    """
    exact = Fraction(dev_fraction) * class_size + Fraction(1, 2)
    return max(1, math.floor(exact))


def _rank_key(seed: int, record_id: str) -> str:
    return hashlib.sha256(f"{seed}\x00{record_id}".encode("utf-8")).hexdigest()


def stratified_split(ds: Dataset, dev_fraction: float, seed: int) -> tuple[Dataset, Dataset]:
    """Split into train/dev preserving per-class proportions.

    Per class the dev set receives ``dev_count(n_c, dev_fraction)`` members.
    Membership depends only on record ids and the seed, so re-running the
    split on a reordered copy of the data selects the same records.
    """
    if not 0.0 < dev_fraction < 1.0:
        raise ValueError(f"dev_fraction must be in (0, 1), got {dev_fraction}")
    labels = ds.require_labels()
    by_class: dict[int, list[str]] = {}
    for rec, label in zip(ds.records, labels):
        by_class.setdefault(label, []).append(rec.id)
    for label, members in by_class.items():
        if len(members) < 2:
            raise ValidationError(
                f"class {label} has {len(members)} member(s); need at least 2 to split"
            )
    dev_ids: set[str] = set()
    for label, members in by_class.items():
        n_dev = dev_count(len(members), dev_fraction)
        ranked = sorted(members, key=lambda rid: _rank_key(seed, rid))
        dev_ids.update(ranked[:n_dev])
    train = Dataset(tuple(rec for rec in ds if rec.id not in dev_ids))
    dev = Dataset(tuple(rec for rec in ds if rec.id in dev_ids))
    return train, dev

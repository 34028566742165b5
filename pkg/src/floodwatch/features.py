"""Feature construction and ingestion.

Two sources feed the classifiers: bag-of-words count vectors built here, and
dense vectors produced by external encoders and read back from feature files.
``hash_embed`` is a deterministic stand-in embedder so the pipeline can run
without any external encoder.

Vocabularies and feature matrices are immutable after construction, and
vectorization is pure, so everything in this module is safe to use from
multiple threads.
"""

from __future__ import annotations

import hashlib
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .corpus import Dataset
from .textprep import TokenSequence


class FeatureError(ValueError):
    """Base class for feature-construction failures."""


class VocabularyError(FeatureError):
    """Vocabulary construction produced no usable tokens."""


class FeatureFileError(FeatureError):
    """A feature file violates the on-disk format."""


class MissingFeaturesError(FeatureError):
    """Requested record ids have no feature rows."""

    def __init__(self, missing: Sequence[str]):
        self.missing = list(missing)
        shown = ", ".join(repr(m) for m in self.missing[:10])
        more = "" if len(self.missing) <= 10 else f" (+{len(self.missing) - 10} more)"
        super().__init__(f"no feature rows for ids: {shown}{more}")


@dataclass(frozen=True)
class Vocabulary:
    """Token-to-index map; indices follow lexicographic token order."""

    token_to_index: dict[str, int]
    min_count: int

    def __len__(self) -> int:
        return len(self.token_to_index)

    def __contains__(self, token: str) -> bool:
        return token in self.token_to_index


@dataclass(frozen=True)
class FeatureMatrix:
    """Dense per-record feature rows keyed by record id.

    Rows are locked read-only after construction.
    """

    ids: tuple[str, ...]
    rows: np.ndarray
    _index: dict[str, int] = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        rows = np.ascontiguousarray(np.asarray(self.rows, dtype=np.float64))
        if rows.ndim != 2:
            raise FeatureError(f"rows must be a 2-D array, got shape {rows.shape}")
        if len(self.ids) != rows.shape[0]:
            raise FeatureError(
                f"{len(self.ids)} ids for {rows.shape[0]} rows; lengths must match"
            )
        if not np.all(np.isfinite(rows)):
            raise FeatureError("feature rows must be finite")
        index: dict[str, int] = {}
        for pos, rid in enumerate(self.ids):
            if rid in index:
                raise FeatureError(f"duplicate feature id {rid!r}")
            index[rid] = pos
        rows.flags.writeable = False
        object.__setattr__(self, "rows", rows)
        object.__setattr__(self, "ids", tuple(self.ids))
        object.__setattr__(self, "_index", index)

    @property
    def dim(self) -> int:
        return self.rows.shape[1]

    def __len__(self) -> int:
        return self.rows.shape[0]

    def __contains__(self, record_id: str) -> bool:
        return record_id in self._index

    def row(self, record_id: str) -> np.ndarray:
        return self.rows[self._index[record_id]]


def build_vocabulary(docs: Iterable[TokenSequence], min_count: int = 1) -> Vocabulary:
    """Collect tokens whose corpus frequency reaches ``min_count``.

    Token order (and therefore indexing) is lexicographic, which makes the
    vocabulary independent of document order.
    """
    if min_count < 1:
        raise ValueError(f"min_count must be >= 1, got {min_count}")
    counts: Counter[str] = Counter()
    for doc in docs:
        counts.update(doc)
    kept = sorted(t for t, c in counts.items() if c >= min_count)
    if not kept:
        raise VocabularyError(f"no token occurs at least {min_count} time(s); nothing to featurize")
    return Vocabulary({t: i for i, t in enumerate(kept)}, min_count)


def bow_vectorize(doc: TokenSequence, vocab: Vocabulary) -> np.ndarray:
    """Count vector over the vocabulary; out-of-vocabulary tokens are ignored."""
    if len(vocab) == 0:
        raise VocabularyError("vocabulary is empty")
    vec = np.zeros(len(vocab), dtype=np.float64)
    lookup = vocab.token_to_index
    for token in doc:
        idx = lookup.get(token)
        if idx is not None:
            vec[idx] += 1.0
    return vec


def bow_matrix(docs: Sequence[TokenSequence], ids: Sequence[str], vocab: Vocabulary) -> FeatureMatrix:
    """Stack ``bow_vectorize`` rows for a document collection."""
    if len(docs) != len(ids):
        raise FeatureError(f"{len(docs)} docs for {len(ids)} ids; lengths must match")
    rows = np.zeros((len(docs), len(vocab)), dtype=np.float64)
    for i, doc in enumerate(docs):
        rows[i] = bow_vectorize(doc, vocab)
    return FeatureMatrix(tuple(ids), rows)


def load_feature_file(path: str | Path) -> FeatureMatrix:
    """Read a feature file.

    Format: line 1 is ``#dim=<D>``; every following nonempty line is
    ``<id><TAB><v1> <v2> ... <vD>``; later ``#`` lines are comments.
    """
    path = Path(path)
    with open(path, encoding="utf-8") as fh:
        first = fh.readline()
        if not first.strip().startswith("#dim="):
            raise FeatureFileError(f"{path.name}: missing '#dim=<D>' header on line 1")
        try:
            dim = int(first.strip()[len("#dim="):])
        except ValueError:
            raise FeatureFileError(f"{path.name}: malformed dim header {first.strip()!r}") from None
        if dim < 1:
            raise FeatureFileError(f"{path.name}: dim must be positive, got {dim}")
        ids: list[str] = []
        seen: set[str] = set()
        rows: list[np.ndarray] = []
        for lineno, line in enumerate(fh, start=2):
            line = line.rstrip("\r\n")
            if not line.strip():
                continue
            if line.startswith("#"):
                continue
            if "\t" not in line:
                raise FeatureFileError(f"{path.name} line {lineno}: expected '<id><TAB><values>'")
            rid, _, payload = line.partition("\t")
            if not rid:
                raise FeatureFileError(f"{path.name} line {lineno}: empty id")
            if rid in seen:
                raise FeatureFileError(f"{path.name} line {lineno}: duplicate id {rid!r}")
            values = payload.split()
            if len(values) != dim:
                raise FeatureFileError(
                    f"{path.name} line {lineno}: id {rid!r} has {len(values)} values, expected {dim}"
                )
            try:
                row = np.array([float(v) for v in values], dtype=np.float64)
            except ValueError:
                raise FeatureFileError(
                    f"{path.name} line {lineno}: id {rid!r} has a non-numeric value"
                ) from None
            if not np.all(np.isfinite(row)):
                raise FeatureFileError(f"{path.name} line {lineno}: id {rid!r} has a non-finite value")
            seen.add(rid)
            ids.append(rid)
            rows.append(row)
    matrix = np.vstack(rows) if rows else np.zeros((0, dim), dtype=np.float64)
    return FeatureMatrix(tuple(ids), matrix)


def save_feature_file(fm: FeatureMatrix, path: str | Path) -> None:
    """Write a feature file; values keep 9 significant digits."""
    path = Path(path)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(f"#dim={fm.dim}\n")
        for rid, row in zip(fm.ids, fm.rows):
            if rid.startswith("#") or "\t" in rid or "\n" in rid or "\r" in rid:
                raise FeatureFileError(f"id {rid!r} cannot be serialized in the feature-file format")
            fh.write(rid + "\t" + " ".join(format(v, ".9g") for v in row) + "\n")


def save_vocabulary(vocab: Vocabulary, path: str | Path) -> None:
    """Write tokens in index order with the min_count recorded in the header."""
    tokens = sorted(vocab.token_to_index, key=vocab.token_to_index.get)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(f"#min_count={vocab.min_count}\n")
        for token in tokens:
            fh.write(token + "\n")


def load_vocabulary(path: str | Path) -> Vocabulary:
    path = Path(path)
    lines = path.read_text(encoding="utf-8").splitlines()
    if not lines or not lines[0].startswith("#min_count="):
        raise FeatureError(f"{path.name}: missing '#min_count=' header")
    min_count = int(lines[0][len("#min_count="):])
    tokens = [ln for ln in lines[1:] if ln]
    return Vocabulary({t: i for i, t in enumerate(tokens)}, min_count)


def hash_embed(doc: TokenSequence, dim: int, seed: int = 0) -> np.ndarray:
    """Deterministic signed bucket-count embedding, L2-normalized when nonzero.

    Each token is hashed (with the seed) to a bucket and a sign; the vector of
    signed counts is then scaled to unit norm.  Identical inputs always give
    identical vectors, on any platform.
    """
    if dim < 1:
        raise ValueError(f"dim must be >= 1, got {dim}")
    vec = np.zeros(dim, dtype=np.float64)
    for token in doc:
        digest = hashlib.sha256(f"{seed}\x00{token}".encode("utf-8")).digest()
        bucket = int.from_bytes(digest[:8], "big") % dim
        sign = 1.0 if digest[8] & 1 == 0 else -1.0
        vec[bucket] += sign
    norm = float(np.linalg.norm(vec))
    if norm > 0.0:
        vec /= norm
    return vec


def hash_embed_matrix(
    docs: Sequence[TokenSequence], ids: Sequence[str], dim: int, seed: int = 0
) -> FeatureMatrix:
    rows = np.zeros((len(docs), dim), dtype=np.float64)
    for i, doc in enumerate(docs):
        rows[i] = hash_embed(doc, dim, seed)
    return FeatureMatrix(tuple(ids), rows)


def align_features(ds: Dataset, fm: FeatureMatrix) -> FeatureMatrix:
    """Reorder feature rows to match dataset record order."""
    missing = [rid for rid in ds.ids() if rid not in fm]
    if missing:
        raise MissingFeaturesError(missing)
    order = [fm._index[rid] for rid in ds.ids()]
    return FeatureMatrix(tuple(ds.ids()), fm.rows[order])


def standardize_fit(rows: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Per-dimension mean and standard deviation; constant dims get std 1."""
    mean = rows.mean(axis=0)
    std = rows.std(axis=0)
    std = np.where(std > 0.0, std, 1.0)
    return mean, std


def standardize_apply(rows: np.ndarray, stats: tuple[np.ndarray, np.ndarray]) -> np.ndarray:
    mean, std = stats
    return (rows - mean) / std

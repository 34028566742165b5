"""Class rebalancing by synthetic minority oversampling (SMOTE).

New minority samples are interpolated between a minority row and one of its
k nearest minority neighbors in whatever feature space the downstream
classifier consumes.  Given an explicit seed the whole procedure is
deterministic; concurrent calls with distinct seeds are independent.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from .features import FeatureMatrix

DEFAULT_K = 5


@dataclass(frozen=True)
class SyntheticSample:
    """A generated minority vector with its interpolation provenance."""

    vector: np.ndarray
    base_index: int
    neighbor_index: int
    u: float


def interpolate(base: np.ndarray, neighbor: np.ndarray, u: float) -> np.ndarray:
    """Point at fraction ``u`` along the segment from base to neighbor."""
    return base + u * (neighbor - base)


def nearest_neighbors(rows: np.ndarray, k: int) -> list[list[int]]:
    """Indices of each row's k nearest Euclidean neighbors (self excluded).

    Ties are broken by lower row index so the result is deterministic.
    """
    n = rows.shape[0]
    diffs = rows[:, None, :] - rows[None, :, :]
    dists = np.sqrt((diffs * diffs).sum(axis=2))
    out = []
    for i in range(n):
        order = [j for j in np.argsort(dists[i], kind="stable") if j != i]
        out.append([int(j) for j in order[:k]])
    return out


def smote(minority: FeatureMatrix, k: int, n_synthetic: int, seed: int) -> list[SyntheticSample]:
    """Generate ``n_synthetic`` interpolated minority samples.

    Base rows are taken round-robin over the minority set; for each sample the
    neighbor is drawn seeded-uniform among the base's k nearest neighbors and
    the interpolation fraction u seeded-uniform in [0, 1] (neighbor drawn
    first, then u).
    """
    n = len(minority)
    if n < 2:
        raise ValueError(f"SMOTE needs at least 2 minority rows, got {n}")
    if k < 1 or k > n - 1:
        raise ValueError(f"k must be in [1, {n - 1}] for {n} minority rows, got {k}")
    if n_synthetic < 0:
        raise ValueError(f"n_synthetic must be >= 0, got {n_synthetic}")
    rng = np.random.default_rng(seed)
    neighbors = nearest_neighbors(minority.rows, k)
    samples = []
    for j in range(n_synthetic):
        base = j % n
        pick = int(rng.integers(k))
        u = float(rng.random())
        nn = neighbors[base][pick]
        vec = interpolate(minority.rows[base], minority.rows[nn], u)
        samples.append(SyntheticSample(vec, base, nn, u))
    return samples


def _synthetic_ids(existing: set[str], count: int) -> list[str]:
    ids = []
    for i in range(count):
        candidate = f"smote-{i}"
        while candidate in existing:
            candidate = "_" + candidate
        existing.add(candidate)
        ids.append(candidate)
    return ids


def rebalance(
    features: FeatureMatrix,
    labels: Sequence[int],
    mode: str = "equalize",
    factor: float = 3.0,
    k: int = DEFAULT_K,
    seed: int = 0,
) -> tuple[FeatureMatrix, list[int]]:
    """Grow the minority class with synthetic rows appended after the originals.

    ``mode='equalize'`` raises the minority to the majority count;
    ``mode='factor'`` raises it to ``factor`` times its original count.
    k is clamped to (minority size - 1).  When counts are tied the positive
    class is treated as the minority.
    """
    labels = list(labels)
    if len(labels) != len(features):
        raise ValueError(f"{len(labels)} labels for {len(features)} rows; lengths must match")
    counts = {0: labels.count(0), 1: labels.count(1)}
    if counts[0] == 0 or counts[1] == 0:
        raise ValueError("rebalance requires both classes to be present")
    minority_label = 1 if counts[1] <= counts[0] else 0
    n_min = counts[minority_label]
    if mode == "equalize":
        target = max(counts.values())
    elif mode == "factor":
        if factor < 1.0:
            raise ValueError(f"factor must be >= 1, got {factor}")
        target = math.floor(Fraction(factor) * n_min + Fraction(1, 2))
    else:
        raise ValueError(f"unknown rebalance mode {mode!r}; expected 'equalize' or 'factor'")
    n_synthetic = target - n_min
    if n_synthetic <= 0:
        return features, labels

    minority_positions = [i for i, y in enumerate(labels) if y == minority_label]
    minority_fm = FeatureMatrix(
        tuple(features.ids[i] for i in minority_positions),
        features.rows[minority_positions],
    )
    k_eff = min(k, n_min - 1)
    samples = smote(minority_fm, k_eff, n_synthetic, seed)

    new_ids = _synthetic_ids(set(features.ids), n_synthetic)
    new_rows = np.vstack([features.rows, np.array([s.vector for s in samples])])
    out = FeatureMatrix(tuple(features.ids) + tuple(new_ids), new_rows)
    return out, labels + [minority_label] * n_synthetic

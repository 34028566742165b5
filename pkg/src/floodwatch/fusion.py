"""Late fusion of member-model posteriors and the final decision rule.

All functions here are pure and safe for concurrent use.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

from .corpus import NOT_RELEVANT, RELEVANT
from .models import PosteriorPair


@dataclass(frozen=True)
class FusionSpec:
    """Ordered member identifiers with their positive fusion weights."""

    member_ids: tuple[str, ...]
    weights: tuple[float, ...]

    def __post_init__(self) -> None:
        if len(self.member_ids) != len(self.weights):
            raise ValueError(
                f"{len(self.member_ids)} member ids for {len(self.weights)} weights"
            )
        if any(w <= 0.0 for w in self.weights):
            raise ValueError("fusion weights must be positive")

    @classmethod
    def equal(cls, member_ids: Sequence[str]) -> "FusionSpec":
        return cls(tuple(member_ids), (1.0,) * len(member_ids))


def fuse(posteriors: Sequence[PosteriorPair], weights: Sequence[float] | None = None) -> PosteriorPair:
    """Componentwise weighted arithmetic mean, renormalized to sum 1.

    ``weights=None`` means equal weights.
    """
    if len(posteriors) == 0:
        raise ValueError("cannot fuse an empty posterior list")
    if weights is None:
        weights = [1.0] * len(posteriors)
    if len(weights) != len(posteriors):
        raise ValueError(f"{len(posteriors)} posteriors for {len(weights)} weights")
    if any(w <= 0.0 for w in weights):
        raise ValueError("fusion weights must be positive")
    # fsum sums are exactly rounded, which makes fusion independent of member
    # order
    total = math.fsum(weights)
    p_neg = math.fsum(w * p.p_neg for w, p in zip(weights, posteriors)) / total
    p_pos = math.fsum(w * p.p_pos for w, p in zip(weights, posteriors)) / total
    s = p_neg + p_pos
    return PosteriorPair(p_neg / s, p_pos / s)


def decide(p: PosteriorPair) -> int:
    """Label with the highest posterior; an exact tie counts as relevant."""
    return RELEVANT if p.p_pos >= p.p_neg else NOT_RELEVANT


def fuse_multimodal(
    text_posteriors: Sequence[PosteriorPair | None],
    image_posterior: PosteriorPair | None,
    spec: FusionSpec,
) -> PosteriorPair:
    """Fuse text members with an optional image member.

    The spec lists weights for all text members followed by the image member.
    Members absent for this record (e.g. a tweet without an image) are dropped
    and the remaining weights renormalize inside ``fuse``.
    """
    members = list(text_posteriors) + [image_posterior]
    if len(members) != len(spec.weights):
        raise ValueError(
            f"{len(members)} members for {len(spec.weights)} configured weights"
        )
    available = [(p, w) for p, w in zip(members, spec.weights) if p is not None]
    if not available:
        raise ValueError("no member posteriors available for fusion")
    return fuse([p for p, _ in available], [w for _, w in available])

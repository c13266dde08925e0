"""Noisy-frame removal ahead of query minimization.

Two-stage surrogate for a learned frame classifier: an explicit quality
threshold (deployments can encode any classifier score into ``quality``)
followed by an embedding-space outlier test using the median absolute
deviation of each frame's mean cosine similarity to the rest of the tube.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, EmptyQueryError
from .model import POSE_CHANNEL, FrameRecord, Tube, resolve_channel

_NORM_FLOOR = 1e-30
# Scales the raw median absolute deviation into a consistent estimate of the
# standard deviation, so mad_k counts sigma-equivalents.
MAD_CONSISTENCY = 1.4826


@dataclass
class FilterConfig:
    q_min: float = 0.5
    mad_k: float = 3.0
    channel: str = POSE_CHANNEL

    def validate(self) -> None:
        if not 0.0 <= self.q_min <= 1.0:
            raise ConfigError("q_min must be in [0,1]")
        if self.mad_k < 0:
            raise ConfigError("mad_k must be >= 0")


def quality_filter(tube: Tube, cfg: FilterConfig) -> tuple[Tube, list[FrameRecord]]:
    """Keep frames with quality >= q_min, preserving order."""
    cfg.validate()
    kept = [f for f in tube.frames if f.quality >= cfg.q_min]
    removed = [f for f in tube.frames if f.quality < cfg.q_min]
    if not kept:
        raise EmptyQueryError(
            f"tube {tube.tube_id}: every frame fell below q_min={cfg.q_min}"
        )
    return _with_frames(tube, kept), removed


def outlier_filter(tube: Tube, cfg: FilterConfig) -> tuple[Tube, list[FrameRecord]]:
    """Drop frames whose mean cosine similarity to the tube is a MAD outlier.

    Tubes shorter than 3 frames pass through unchanged. Removal requires
    MAD > 0 (identical frames are not noise) and never exceeds floor(m/2)
    frames; if the threshold rule would exceed the cap, the lowest-scoring
    frames go first.
    """
    cfg.validate()
    m = len(tube.frames)
    if m < 3:
        return tube, []

    channel = resolve_channel(tube.frames[0].embeddings, cfg.channel)
    vectors = np.stack([f.embeddings[channel] for f in tube.frames]).astype(np.float64)
    norms = np.sqrt(np.einsum("ij,ij->i", vectors, vectors))
    # Zero-norm frames are garbage by definition; the floor keeps the math
    # finite and gives them zero similarity to everything.
    unit = vectors / np.maximum(norms, _NORM_FLOOR)[:, None]
    cosines = unit @ unit.T
    mean_sim = (cosines.sum(axis=1) - 1.0) / (m - 1)

    median = float(np.median(mean_sim))
    mad = MAD_CONSISTENCY * float(np.median(np.abs(mean_sim - median)))
    if mad == 0.0:
        return tube, []

    cutoff = median - cfg.mad_k * mad
    flagged = np.flatnonzero(mean_sim < cutoff)
    cap = m // 2
    if len(flagged) > cap:
        flagged = flagged[np.argsort(mean_sim[flagged], kind="stable")[:cap]]
    drop = set(int(i) for i in flagged)

    kept = [f for i, f in enumerate(tube.frames) if i not in drop]
    removed = [f for i, f in enumerate(tube.frames) if i in drop]
    return _with_frames(tube, kept), removed


def filter_tube(tube: Tube, cfg: FilterConfig) -> tuple[Tube, list[FrameRecord]]:
    """Quality threshold, then outlier test; removed lists concatenate."""
    kept, removed_q = quality_filter(tube, cfg)
    kept, removed_o = outlier_filter(kept, cfg)
    return kept, removed_q + removed_o


def _with_frames(tube: Tube, frames: list[FrameRecord]) -> Tube:
    return Tube(
        tube_id=tube.tube_id,
        camera_id=tube.camera_id,
        frames=frames,
        person_id=tube.person_id,
    )

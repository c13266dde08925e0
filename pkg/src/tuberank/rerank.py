"""Stages 2 and 3: self-similarity fusion and temporal-correlation tube ranking.

Stage 2 averages each stage-1 score with a self-similarity score between
the query frame and the retrieved frame, then re-sorts each row; false
positives tend to score low on self-similarity and sink. Stage 3 turns
the fused result matrix into a tube ranking: each entry contributes the
product of its reciprocal within-row rank and its tube's support weight,
and tubes accumulate those contributions across all rows.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import fsum

import numpy as np

from .model import SELFSIM_CHANNEL, FrameRecord, Gallery, resolve_channel
from .retrieval import ImageScorer, ScoredImage, get_scorer


@dataclass
class ResultMatrix:
    """Fused rows, one per minimized query frame, aligned with query_indices."""

    rows: list[list[ScoredImage]]
    query_indices: list[int]


@dataclass(frozen=True)
class TubeScore:
    tube_id: str
    score: float
    support: int
    beta: float


RankedTubes = list[TubeScore]
FinalRanking = list[ScoredImage]


def self_similarity_rerank(
    stage1: list[tuple[int, list[ScoredImage]]],
    query_frames: list[FrameRecord],
    gallery: Gallery,
    scorer: ImageScorer | None = None,
    channel: str = SELFSIM_CHANNEL,
) -> ResultMatrix:
    """Fuse stage-1 scores with self-similarity and re-rank each row."""
    scorer = scorer or get_scorer("cosine")
    lookup = gallery.frame_by_key
    rows: list[list[ScoredImage]] = []
    for query_index, row in stage1:
        if not row:
            raise ValueError("stage-1 rows must be non-empty")
        query_frame = query_frames[query_index]
        q_channel = resolve_channel(query_frame.embeddings, channel)
        query = np.asarray(query_frame.embeddings[q_channel], dtype=np.float64)
        candidates = np.stack(
            [
                lookup[(img.tube_id, img.frame_index)].embeddings[
                    resolve_channel(gallery.channel_dims, channel)
                ]
                for img in row
            ]
        ).astype(np.float64)
        selfsim = scorer.score_many(query, candidates)
        fused = [
            (0.5 * (img.score + float(s)), img) for img, s in zip(row, selfsim)
        ]
        fused.sort(key=lambda e: (-e[0], e[1].tube_id, e[1].frame_index))
        rows.append(
            [
                ScoredImage(
                    tube_id=img.tube_id,
                    frame_index=img.frame_index,
                    score=score,
                    rank=rank,
                )
                for rank, (score, img) in enumerate(fused, start=1)
            ]
        )
    return ResultMatrix(rows=rows, query_indices=[qi for qi, _ in stage1])


def image_weight(rank: int) -> float:
    """Reciprocal-rank weight of a result-matrix entry."""
    if rank < 1:
        raise ValueError(f"rank must be >= 1, got {rank}")
    return 1.0 / rank


def tube_weights(matrix: ResultMatrix, gallery: Gallery) -> dict[str, float]:
    """Support weight per tube: its entry count over the best tube's count."""
    if not matrix.rows:
        raise ValueError("result matrix has no rows")
    counts: dict[str, int] = {}
    for row in matrix.rows:
        for img in row:
            if img.tube_id not in gallery.tube_by_id:
                raise ValueError(f"result references unknown tube {img.tube_id}")
            counts[img.tube_id] = counts.get(img.tube_id, 0) + 1
    top = max(counts.values())
    return {tube_id: c / top for tube_id, c in counts.items()}


def rank_tubes(matrix: ResultMatrix, gallery: Gallery) -> RankedTubes:
    """Rank tubes by summed temporal-correlation weight across all rows."""
    betas = tube_weights(matrix, gallery)
    contributions: dict[str, list[float]] = {}
    support: dict[str, int] = {}
    for row in matrix.rows:
        for img in row:
            tau = image_weight(img.rank) * betas[img.tube_id]
            contributions.setdefault(img.tube_id, []).append(tau)
            support[img.tube_id] = support.get(img.tube_id, 0) + 1
    scored = [
        TubeScore(
            tube_id=tube_id,
            score=fsum(taus),
            support=support[tube_id],
            beta=betas[tube_id],
        )
        for tube_id, taus in contributions.items()
    ]
    scored.sort(key=lambda t: (-t.score, -t.support, t.tube_id))
    return scored


def extract_final_images(matrix: ResultMatrix, ranked: RankedTubes) -> FinalRanking:
    """One image per ranked tube: its best fused entry across all rows.

    Ties break toward the lowest row index, then the lowest rank, which a
    first-seen scan over rows in order realizes directly.
    """
    if not ranked:
        raise ValueError("ranked tube list is empty")
    best: dict[str, ScoredImage] = {}
    for row in matrix.rows:
        for img in row:
            cur = best.get(img.tube_id)
            if cur is None or img.score > cur.score:
                best[img.tube_id] = img
    return [
        ScoredImage(
            tube_id=t.tube_id,
            frame_index=best[t.tube_id].frame_index,
            score=best[t.tube_id].score,
            rank=position,
        )
        for position, t in enumerate(ranked, start=1)
    ]

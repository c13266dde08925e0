"""Stage 1: exact per-image retrieval against every gallery frame.

The image scorer is pluggable; the default maps cosine similarity onto
[0,1]. Both the scalar scorer and the batched gallery scoring go through
the same einsum reduction, so batch results are bit-identical to scoring
frames one at a time (the exactness the top-k oracle test relies on).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, EmptyGalleryError
from .model import RETRIEVAL_CHANNEL, FrameRecord, Gallery, resolve_channel
from .minimizer import MinimizedQuery


@dataclass(frozen=True)
class ScoredImage:
    tube_id: str
    frame_index: int
    score: float
    rank: int


@dataclass
class RetrievalConfig:
    k: int = 20
    channel: str = RETRIEVAL_CHANNEL
    scorer: str = "cosine"

    def validate(self) -> None:
        if self.k < 1:
            raise ConfigError("k must be >= 1")
        if self.scorer not in SCORERS:
            raise ConfigError(
                f"unknown scorer {self.scorer!r}; available: {sorted(SCORERS)}"
            )


def _dot(a: np.ndarray, b: np.ndarray) -> float:
    return float(np.einsum("j,j->", a, b))


def cosine_scorer(a, b) -> float:
    """(1 + cosine)/2 in [0,1]; errors on zero norms or unequal dims.

    The cosine divides by sqrt(|a|^2 * |b|^2) so identical vectors score
    exactly 1.0 and mirrored vectors exactly 0.0.
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError(f"dimension mismatch: {a.shape[0]} vs {b.shape[0]}")
    aa, bb = _dot(a, a), _dot(b, b)
    if aa == 0.0 or bb == 0.0:
        raise ValueError("cosine is undefined for a zero-norm vector")
    return float(np.clip((1.0 + _dot(a, b) / np.sqrt(aa * bb)) * 0.5, 0.0, 1.0))


class ImageScorer:
    """Deterministic pairwise image similarity in [0,1], higher = closer.

    ``score_many`` exists for throughput; the default loops ``score`` and
    implementations overriding it must return bit-identical values. The
    optional third argument carries precomputed squared norms of the
    gallery rows.
    """

    name = "base"

    def score(self, query_embedding, gallery_embedding) -> float:
        raise NotImplementedError

    def score_many(self, query_embedding, gallery_matrix, gallery_sq_norms=None) -> np.ndarray:
        return np.array(
            [self.score(query_embedding, row) for row in gallery_matrix],
            dtype=np.float64,
        )


class CosineScorer(ImageScorer):
    name = "cosine"

    def score(self, query_embedding, gallery_embedding) -> float:
        return cosine_scorer(query_embedding, gallery_embedding)

    def score_many(self, query_embedding, gallery_matrix, gallery_sq_norms=None) -> np.ndarray:
        q = np.asarray(query_embedding, dtype=np.float64)
        m = np.asarray(gallery_matrix, dtype=np.float64)
        if m.shape[1] != q.shape[0]:
            raise ValueError(f"dimension mismatch: {q.shape[0]} vs {m.shape[1]}")
        qq = _dot(q, q)
        if qq == 0.0:
            raise ValueError("cosine is undefined for a zero-norm vector")
        if gallery_sq_norms is None:
            gallery_sq_norms = np.einsum("ij,ij->i", m, m)
        scores = (
            1.0 + np.einsum("ij,j->i", m, q) / np.sqrt(gallery_sq_norms * qq)
        ) * 0.5
        return np.clip(scores, 0.0, 1.0)


SCORERS: dict[str, ImageScorer] = {"cosine": CosineScorer()}


def get_scorer(name: str) -> ImageScorer:
    try:
        return SCORERS[name]
    except KeyError:
        raise ConfigError(f"unknown scorer {name!r}; available: {sorted(SCORERS)}")


def retrieve_top_k(
    query_frame: FrameRecord,
    gallery: Gallery,
    cfg: RetrievalConfig,
    scorer: ImageScorer | None = None,
) -> list[ScoredImage]:
    """Score every gallery frame and keep the top k.

    Ordering is total: descending score, ties broken by ascending
    (tube_id, frame_index). Equals the k-prefix of a full sort.
    """
    cfg.validate()
    scorer = scorer or get_scorer(cfg.scorer)
    table = gallery.frame_table
    if len(table) == 0:
        raise EmptyGalleryError("gallery has no frames")

    channel = resolve_channel(gallery.channel_dims, cfg.channel)
    query = np.asarray(
        query_frame.embeddings[resolve_channel(query_frame.embeddings, cfg.channel)],
        dtype=np.float64,
    )
    if query.shape[0] != gallery.channel_dims[channel]:
        raise ValueError(
            f"dimension mismatch on channel {channel!r}: query "
            f"{query.shape[0]}, gallery {gallery.channel_dims[channel]}"
        )

    matrix, sq_norms = table.channel_matrix(channel)
    scores = scorer.score_many(query, matrix, sq_norms)
    # The table is pre-sorted in tie-break order, so a stable sort on
    # descending score realizes the full deterministic ordering.
    order = np.argsort(-scores, kind="stable")[: cfg.k]
    return [
        ScoredImage(
            tube_id=table.tube_ids[i],
            frame_index=int(table.frame_indices[i]),
            score=float(scores[i]),
            rank=rank,
        )
        for rank, i in enumerate(order, start=1)
    ]


def retrieve_for_query(
    minimized: MinimizedQuery,
    query_frames: list[FrameRecord],
    gallery: Gallery,
    cfg: RetrievalConfig,
    scorer: ImageScorer | None = None,
) -> list[tuple[int, list[ScoredImage]]]:
    """One ranked list per selected query frame, in selection order."""
    if not minimized.selected:
        raise ValueError("minimized query is empty")
    return [
        (idx, retrieve_top_k(query_frames[idx], gallery, cfg, scorer))
        for idx in minimized.selected
    ]

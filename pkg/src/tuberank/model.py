"""Core data model: frames, tubes, galleries and the channel conventions.

A tube is the temporally ordered sequence of per-frame embedding records of
one tracked person seen by one camera; a gallery is a collection of tubes.
Embeddings live in named channels so the three scoring roles of the cascade
(base retrieval, self-similarity, pose) stay independently pluggable.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .errors import GalleryFormatError

RETRIEVAL_CHANNEL = "retrieval"
SELFSIM_CHANNEL = "selfsim"
POSE_CHANNEL = "pose"
STANDARD_CHANNELS = (RETRIEVAL_CHANNEL, SELFSIM_CHANNEL, POSE_CHANNEL)


@dataclass
class FrameRecord:
    """One frame of one tube.

    ``embeddings`` maps channel name to a dense float32 vector. ``person_id``
    is ground truth, present only when the data carries labels for evaluation.
    """

    tube_id: str
    camera_id: str
    frame_index: int
    timestamp_ms: int
    quality: float
    embeddings: dict[str, np.ndarray]
    person_id: str | None = None

    def __post_init__(self):
        if self.frame_index < 0:
            raise GalleryFormatError(
                f"frame_index must be >= 0, got {self.frame_index} (tube {self.tube_id})"
            )
        if self.timestamp_ms < 0:
            raise GalleryFormatError(
                f"timestamp_ms must be >= 0, got {self.timestamp_ms} (tube {self.tube_id})"
            )
        if not math.isfinite(self.quality) or not 0.0 <= self.quality <= 1.0:
            raise GalleryFormatError(
                f"quality must be in [0,1], got {self.quality} (tube {self.tube_id})"
            )

    def embedding(self, channel: str) -> np.ndarray:
        """The vector for ``channel``, falling back to the retrieval channel."""
        resolved = resolve_channel(self.embeddings, channel)
        return self.embeddings[resolved]


@dataclass
class Tube:
    """Non-empty, frame_index-ordered sequence of frames from one camera."""

    tube_id: str
    camera_id: str
    frames: list[FrameRecord]
    person_id: str | None = None

    def __len__(self) -> int:
        return len(self.frames)

    @property
    def channels(self) -> set[str]:
        return set(self.frames[0].embeddings)


def build_tube(frames: list[FrameRecord]) -> Tube:
    """Assemble a validated Tube from consecutive records of one tube_id."""
    if not frames:
        raise GalleryFormatError("a tube must contain at least one frame")
    first = frames[0]
    for prev, cur in zip(frames, frames[1:]):
        if cur.tube_id != first.tube_id:
            raise GalleryFormatError(
                f"tube {first.tube_id}: frame with mismatched tube_id {cur.tube_id}"
            )
        if cur.camera_id != first.camera_id:
            raise GalleryFormatError(
                f"tube {first.tube_id}: camera_id changes from "
                f"{first.camera_id} to {cur.camera_id}"
            )
        if cur.person_id != first.person_id:
            raise GalleryFormatError(
                f"tube {first.tube_id}: person_id changes within the tube"
            )
        if cur.frame_index <= prev.frame_index:
            raise GalleryFormatError(
                f"tube {first.tube_id}: frame_index not strictly increasing "
                f"({prev.frame_index} then {cur.frame_index})"
            )
    return Tube(
        tube_id=first.tube_id,
        camera_id=first.camera_id,
        frames=frames,
        person_id=first.person_id,
    )


@dataclass
class FrameTable:
    """Flat, canonically ordered view of every frame in a gallery.

    Frames are sorted by (tube_id, frame_index), the global tie-break order,
    so a stable sort on descending score yields fully deterministic rankings.
    Per-channel embedding matrices are materialized lazily in float64.
    """

    frames: list[FrameRecord]
    tube_ids: list[str]
    frame_indices: np.ndarray
    _matrices: dict[str, tuple[np.ndarray, np.ndarray]] = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.frames)

    def channel_matrix(self, channel: str) -> tuple[np.ndarray, np.ndarray]:
        """(embeddings, squared norms) for ``channel``; rejects zero norms."""
        cached = self._matrices.get(channel)
        if cached is not None:
            return cached
        rows = np.stack(
            [f.embeddings[channel] for f in self.frames]
        ).astype(np.float64)
        sq_norms = np.einsum("ij,ij->i", rows, rows)
        if np.any(sq_norms == 0.0):
            i = int(np.argmax(sq_norms == 0.0))
            bad = self.frames[i]
            raise ValueError(
                f"zero-norm {channel} embedding in tube {bad.tube_id} "
                f"frame {bad.frame_index}"
            )
        self._matrices[channel] = (rows, sq_norms)
        return rows, sq_norms


@dataclass
class Gallery:
    """The searchable collection of tubes, immutable after construction."""

    tubes: list[Tube]
    channel_dims: dict[str, int]

    def __len__(self) -> int:
        return len(self.tubes)

    @cached_property
    def frame_table(self) -> FrameTable:
        ordered: list[FrameRecord] = []
        for tube in sorted(self.tubes, key=lambda t: t.tube_id):
            ordered.extend(tube.frames)
        return FrameTable(
            frames=ordered,
            tube_ids=[f.tube_id for f in ordered],
            frame_indices=np.array([f.frame_index for f in ordered], dtype=np.int64),
        )

    @cached_property
    def tube_by_id(self) -> dict[str, Tube]:
        return {t.tube_id: t for t in self.tubes}

    @cached_property
    def frame_by_key(self) -> dict[tuple[str, int], FrameRecord]:
        return {
            (f.tube_id, f.frame_index): f
            for t in self.tubes
            for f in t.frames
        }

    @property
    def n_frames(self) -> int:
        return sum(len(t) for t in self.tubes)

    def person_of(self, tube_id: str) -> str | None:
        return self.tube_by_id[tube_id].person_id


def build_gallery(tubes: list[Tube]) -> Gallery:
    """Validate cross-tube invariants and derive channel dimensions."""
    seen_ids: set[str] = set()
    channel_dims: dict[str, int] = {}
    for tube in tubes:
        if tube.tube_id in seen_ids:
            raise GalleryFormatError(f"duplicate tube_id {tube.tube_id}")
        seen_ids.add(tube.tube_id)
        for frame in tube.frames:
            for channel, vec in frame.embeddings.items():
                dim = int(vec.shape[0])
                known = channel_dims.setdefault(channel, dim)
                if dim != known:
                    raise GalleryFormatError(
                        f"tube {tube.tube_id}: channel {channel} has dimension "
                        f"{dim}, expected {known}"
                    )
    return Gallery(tubes=tubes, channel_dims=channel_dims)


def resolve_channel(available, channel: str) -> str:
    """Pick ``channel`` if present, else fall back to the retrieval channel.

    ``available`` is anything supporting ``in`` over channel names (a dict of
    embeddings, a Gallery.channel_dims, or a set).
    """
    if channel in available:
        return channel
    if RETRIEVAL_CHANNEL in available:
        return RETRIEVAL_CHANNEL
    raise ValueError(
        f"channel {channel!r} not present and no {RETRIEVAL_CHANNEL!r} fallback"
    )

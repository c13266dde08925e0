"""Gallery file format: UTF-8 JSON lines, one frame record per line.

Records of a tube must be contiguous and frame_index-ascending. Embedding
values are stored as the shortest decimal renderings of 32-bit floats, so a
write/load cycle reproduces bit-identical float32 vectors.
"""

from __future__ import annotations

import json
import math
import os
from typing import IO, Iterable

import numpy as np

from .errors import GalleryFormatError
from .model import FrameRecord, Gallery, Tube, build_gallery, build_tube

REQUIRED_KEYS = (
    "tube_id",
    "camera_id",
    "frame_index",
    "timestamp_ms",
    "quality",
    "embeddings",
)


def parse_frame_record(line: str, line_no: int | None = None) -> FrameRecord:
    """Parse one JSON-line record, validating schema and value ranges."""
    try:
        obj = json.loads(line)
    except json.JSONDecodeError as exc:
        raise GalleryFormatError(f"malformed JSON: {exc.msg}", line=line_no) from exc
    if not isinstance(obj, dict):
        raise GalleryFormatError("record is not a JSON object", line=line_no)
    for key in REQUIRED_KEYS:
        if key not in obj:
            raise GalleryFormatError(f"missing required field {key!r}", line=line_no)

    tube_id = obj["tube_id"]
    camera_id = obj["camera_id"]
    if not isinstance(tube_id, str) or not isinstance(camera_id, str):
        raise GalleryFormatError("tube_id and camera_id must be strings", line=line_no)
    frame_index = obj["frame_index"]
    timestamp_ms = obj["timestamp_ms"]
    if not isinstance(frame_index, int) or isinstance(frame_index, bool):
        raise GalleryFormatError("frame_index must be an integer", line=line_no)
    if not isinstance(timestamp_ms, int) or isinstance(timestamp_ms, bool):
        raise GalleryFormatError("timestamp_ms must be an integer", line=line_no)
    quality = obj["quality"]
    if not isinstance(quality, (int, float)) or isinstance(quality, bool):
        raise GalleryFormatError("quality must be a number", line=line_no)

    raw_embeddings = obj["embeddings"]
    if not isinstance(raw_embeddings, dict) or not raw_embeddings:
        raise GalleryFormatError(
            "embeddings must be a non-empty object of channel -> vector",
            line=line_no,
        )
    embeddings: dict[str, np.ndarray] = {}
    for channel, values in raw_embeddings.items():
        if not isinstance(values, list) or not values:
            raise GalleryFormatError(
                f"embedding channel {channel!r} must be a non-empty array",
                line=line_no,
            )
        for v in values:
            if not isinstance(v, (int, float)) or isinstance(v, bool) or not math.isfinite(v):
                raise GalleryFormatError(
                    f"non-finite or non-numeric value in channel {channel!r}",
                    line=line_no,
                )
        embeddings[channel] = np.asarray(values, dtype=np.float32)

    person_id = obj.get("person_id")
    if person_id is not None and not isinstance(person_id, str):
        raise GalleryFormatError("person_id must be a string when present", line=line_no)

    try:
        return FrameRecord(
            tube_id=tube_id,
            camera_id=camera_id,
            frame_index=frame_index,
            timestamp_ms=timestamp_ms,
            quality=float(quality),
            embeddings=embeddings,
            person_id=person_id,
        )
    except GalleryFormatError as exc:
        raise GalleryFormatError(str(exc), line=line_no) from exc


def _read_records(fh: IO[str]) -> Iterable[FrameRecord]:
    for line_no, line in enumerate(fh, start=1):
        if not line.strip():
            continue
        yield parse_frame_record(line, line_no)


def load_gallery(path: str | os.PathLike) -> Gallery:
    """Load a gallery file; either every invariant holds or this raises."""
    tubes: list[Tube] = []
    closed: set[str] = set()
    current: list[FrameRecord] = []
    with open(path, encoding="utf-8") as fh:
        for record in _read_records(fh):
            if current and record.tube_id != current[0].tube_id:
                tubes.append(build_tube(current))
                closed.add(current[0].tube_id)
                current = []
            if record.tube_id in closed:
                raise GalleryFormatError(
                    f"records of tube {record.tube_id} are not contiguous"
                )
            current.append(record)
    if current:
        tubes.append(build_tube(current))
    return build_gallery(tubes)


def _render_f32(value: float) -> float:
    """Shortest decimal that parses back to the same 32-bit float."""
    return float(str(np.float32(value)))


def record_to_json(frame: FrameRecord) -> str:
    obj: dict = {
        "tube_id": frame.tube_id,
        "camera_id": frame.camera_id,
        "frame_index": frame.frame_index,
        "timestamp_ms": frame.timestamp_ms,
        "quality": frame.quality,
        "embeddings": {
            channel: [_render_f32(v) for v in vec]
            for channel, vec in frame.embeddings.items()
        },
    }
    if frame.person_id is not None:
        obj["person_id"] = frame.person_id
    return json.dumps(obj, separators=(",", ":"))


def write_gallery(gallery: Gallery, path: str | os.PathLike) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        write_tubes(gallery.tubes, fh)


def write_tubes(tubes: Iterable[Tube], fh: IO[str]) -> None:
    for tube in tubes:
        for frame in tube.frames:
            fh.write(record_to_json(frame))
            fh.write("\n")

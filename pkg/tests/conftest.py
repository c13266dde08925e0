import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from tuberank.model import FrameRecord, build_gallery, build_tube
from tuberank.synth import SynthConfig


def make_frame(tube_id, frame_index, embeddings, quality=1.0, camera_id="c0",
               person_id=None, timestamp_ms=None):
    return FrameRecord(
        tube_id=tube_id,
        camera_id=camera_id,
        frame_index=frame_index,
        timestamp_ms=frame_index * 40 if timestamp_ms is None else timestamp_ms,
        quality=quality,
        embeddings={k: np.asarray(v, dtype=np.float32) for k, v in embeddings.items()},
        person_id=person_id,
    )


def make_tube(tube_id, vectors, channel="retrieval", qualities=None, camera_id="c0",
              person_id=None, extra_channels=None):
    frames = []
    for i, vec in enumerate(vectors):
        emb = {channel: vec}
        if extra_channels:
            emb.update({name: vecs[i] for name, vecs in extra_channels.items()})
        q = 1.0 if qualities is None else qualities[i]
        frames.append(make_frame(tube_id, i, emb, quality=q, camera_id=camera_id,
                                 person_id=person_id))
    return build_tube(frames)


def make_gallery(tubes):
    return build_gallery(tubes)


def benchmark_config(seed):
    """The hard synthetic benchmark: distractor pairs confusable in the
    retrieval channel, contaminated gallery frames, 15% junk frames."""
    return SynthConfig(
        seed=seed,
        n_identities=50,
        n_cameras=2,
        tubes_per_identity_per_camera=3,
        frames_per_tube_range=(20, 40),
        noise_frame_rate=0.15,
        appearance_noise_sigma=0.35,
        camera_offset_sigma=0.5,
        pose_drift_sigma=0.15,
        distractor_pairs=10,
        distractor_gap=0.15,
        confusion_frame_rate=0.08,
    )


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(12345)

import numpy as np
import pytest

from tuberank.errors import ConfigError
from tuberank.gallery_io import record_to_json
from tuberank.synth import SynthConfig, generate_synthetic, is_injected_noise


def test_counts_forced_by_config():
    cfg = SynthConfig(seed=7, n_identities=5, n_cameras=2,
                      tubes_per_identity_per_camera=1,
                      frames_per_tube_range=(10, 10), noise_frame_rate=0.0)
    gallery, probes = generate_synthetic(cfg)
    assert len(gallery.tubes) == 5
    assert len(probes) == 5
    assert gallery.n_frames == 50
    assert sum(len(t) for t in probes) == 50
    assert {t.camera_id for t in gallery.tubes} == {"c0"}
    assert {t.camera_id for t in probes} == {"c1"}


def test_probe_and_gallery_share_identities():
    cfg = SynthConfig(seed=1, n_identities=4, n_cameras=3)
    gallery, probes = generate_synthetic(cfg)
    assert {t.person_id for t in gallery.tubes} == {t.person_id for t in probes}
    assert {t.camera_id for t in gallery.tubes} == {"c0", "c1"}
    assert {t.camera_id for t in probes} == {"c2"}


def test_determinism_bit_identical():
    cfg = SynthConfig(seed=99, n_identities=3, n_cameras=2,
                      frames_per_tube_range=(4, 8), noise_frame_rate=0.3,
                      distractor_pairs=1, confusion_frame_rate=0.1)
    g1, p1 = generate_synthetic(cfg)
    g2, p2 = generate_synthetic(cfg)
    lines1 = [record_to_json(f) for t in g1.tubes + p1 for f in t.frames]
    lines2 = [record_to_json(f) for t in g2.tubes + p2 for f in t.frames]
    assert lines1 == lines2


def test_noise_fraction_matches_rate():
    # Fraction of quality<0.5 frames over 1000 tubes approximates the
    # configured rate; expected 0.3 within +-0.03.
    noisy = total = 0
    seed = 0
    tubes = []
    while len(tubes) < 1000:
        cfg = SynthConfig(seed=5000 + seed, n_identities=10, n_cameras=2,
                          tubes_per_identity_per_camera=5,
                          frames_per_tube_range=(10, 10), noise_frame_rate=0.3)
        gallery, probes = generate_synthetic(cfg)
        tubes.extend(gallery.tubes)
        tubes.extend(probes)
        seed += 1
    for tube in tubes[:1000]:
        for frame in tube.frames:
            total += 1
            noisy += frame.quality < 0.5
    assert abs(noisy / total - 0.3) <= 0.03


def test_quality_marks_injected_noise():
    cfg = SynthConfig(seed=2, n_identities=3, n_cameras=2, noise_frame_rate=0.5)
    gallery, _ = generate_synthetic(cfg)
    for tube in gallery.tubes:
        for frame in tube.frames:
            if is_injected_noise(frame):
                assert frame.quality <= 0.3
            else:
                assert frame.quality >= 0.7


def test_distractor_pairs_geometry():
    cfg = SynthConfig(seed=4, n_identities=6, n_cameras=2, distractor_pairs=2,
                      distractor_gap=0.15, appearance_noise_sigma=0.0,
                      camera_offset_sigma=0.0, noise_frame_rate=0.0)
    gallery, _ = generate_synthetic(cfg)
    by_person = {t.person_id: t for t in gallery.tubes}

    def channel_cos(pa, pb, ch):
        a = by_person[pa].frames[0].embeddings[ch].astype(float)
        b = by_person[pb].frames[0].embeddings[ch].astype(float)
        return float(a @ b / (np.linalg.norm(a) * np.linalg.norm(b)))

    # paired identities nearly coincide in retrieval, stay apart in selfsim
    assert channel_cos("p000", "p001", "retrieval") > 0.95
    assert channel_cos("p002", "p003", "retrieval") > 0.95
    assert channel_cos("p000", "p001", "selfsim") < 0.6
    # unpaired identities are unrelated in retrieval
    assert channel_cos("p004", "p005", "retrieval") < 0.6


def test_pose_consecutive_frames_similar():
    cfg = SynthConfig(seed=8, n_identities=2, n_cameras=2,
                      frames_per_tube_range=(20, 20), appearance_noise_sigma=0.1)
    gallery, _ = generate_synthetic(cfg)
    tube = gallery.tubes[0]
    cos_adjacent = []
    cos_far = []
    for i in range(len(tube.frames) - 1):
        a = tube.frames[i].embeddings["pose"].astype(float)
        b = tube.frames[i + 1].embeddings["pose"].astype(float)
        cos_adjacent.append(a @ b / (np.linalg.norm(a) * np.linalg.norm(b)))
    first = tube.frames[0].embeddings["pose"].astype(float)
    last = tube.frames[-1].embeddings["pose"].astype(float)
    cos_far = first @ last / (np.linalg.norm(first) * np.linalg.norm(last))
    assert min(cos_adjacent) > cos_far


@pytest.mark.parametrize("field,value", [
    ("n_identities", 0),
    ("n_cameras", 1),
    ("tubes_per_identity_per_camera", 0),
    ("noise_frame_rate", 1.5),
    ("appearance_noise_sigma", -0.1),
    ("distractor_pairs", 100),
])
def test_config_validation(field, value):
    cfg = SynthConfig()
    setattr(cfg, field, value)
    with pytest.raises(ConfigError):
        generate_synthetic(cfg)


def test_bad_frame_range():
    with pytest.raises(ConfigError):
        generate_synthetic(SynthConfig(frames_per_tube_range=(5, 2)))

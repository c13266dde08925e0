"""Seeded synthetic gallery generator for desk-scale verification.

Geometry: each identity gets a unit latent vector per channel; a frame
embedding is latent + camera offset + appearance noise, with the pose
channel additionally drifting along the tube as a slow angular sweep so
consecutive frames stay pose-similar. Sigma parameters are expressed as
vector norms against the unit latent. Appearance noise is drawn uniformly
on the sigma-radius sphere, so every clean frame carries the same
perturbation energy and clean per-frame deviation statistics stay
symmetric (Gaussian balls would left-skew them via chi-distributed norms).

Two kinds of planted difficulty: "distractor" identity pairs are nearly
coincident in the retrieval channel but separated in selfsim, and
"confusion" frames put another person's appearance inside a gallery tube
(tracker contamination), which only tube-level evidence can demote.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError
from .model import (
    POSE_CHANNEL,
    RETRIEVAL_CHANNEL,
    SELFSIM_CHANNEL,
    Gallery,
    FrameRecord,
    Tube,
    build_gallery,
    build_tube,
)

DEFAULT_DIMS = {RETRIEVAL_CHANNEL: 32, SELFSIM_CHANNEL: 32, POSE_CHANNEL: 16}

NOISY_QUALITY_MAX = 0.3
CLEAN_QUALITY_MIN = 0.7
CORRUPTION_NORM = 3.0
POSE_JITTER_FRACTION = 0.25
# Arc swept by a tube's pose angle, as multiples of pose_drift_sigma; the
# band keeps pose spread wide for every tube length.
POSE_ARC_BAND = (16.0, 33.0)
FRAME_INTERVAL_MS = 40


@dataclass
class SynthConfig:
    seed: int = 0
    n_identities: int = 10
    n_cameras: int = 2
    tubes_per_identity_per_camera: int = 1
    frames_per_tube_range: tuple[int, int] = (10, 20)
    dims: dict[str, int] = field(default_factory=lambda: dict(DEFAULT_DIMS))
    noise_frame_rate: float = 0.0
    appearance_noise_sigma: float = 0.2
    camera_offset_sigma: float = 0.2
    pose_drift_sigma: float = 0.15
    distractor_pairs: int = 0
    distractor_gap: float = 0.3
    distractor_selfsim_gap: float = 0.0
    confusion_frame_rate: float = 0.0

    def validate(self) -> None:
        if self.n_identities < 1:
            raise ConfigError("n_identities must be >= 1")
        if self.n_cameras < 2:
            raise ConfigError("n_cameras must be >= 2 (probes use the last camera)")
        if self.tubes_per_identity_per_camera < 1:
            raise ConfigError("tubes_per_identity_per_camera must be >= 1")
        lo, hi = self.frames_per_tube_range
        if lo < 1 or lo > hi:
            raise ConfigError("frames_per_tube_range must satisfy 1 <= min <= max")
        if not 0.0 <= self.noise_frame_rate <= 1.0:
            raise ConfigError("noise_frame_rate must be in [0,1]")
        for name in ("appearance_noise_sigma", "camera_offset_sigma", "pose_drift_sigma"):
            if getattr(self, name) < 0:
                raise ConfigError(f"{name} must be >= 0")
        if not self.dims or any(d < 1 for d in self.dims.values()):
            raise ConfigError("dims must map each channel to a positive dimension")
        if RETRIEVAL_CHANNEL not in self.dims:
            raise ConfigError(f"dims must include the {RETRIEVAL_CHANNEL!r} channel")
        if self.distractor_pairs < 0 or 2 * self.distractor_pairs > self.n_identities:
            raise ConfigError("distractor_pairs must satisfy 0 <= 2*pairs <= n_identities")
        if self.distractor_gap <= 0 or self.distractor_selfsim_gap < 0:
            raise ConfigError("distractor_gap must be > 0 and distractor_selfsim_gap >= 0")
        if not 0.0 <= self.confusion_frame_rate <= 1.0:
            raise ConfigError("confusion_frame_rate must be in [0,1]")
        if self.confusion_frame_rate > 0 and self.n_identities < 2:
            raise ConfigError("confusion frames need at least 2 identities")


def _unit(rng: np.random.Generator, dim: int) -> np.ndarray:
    v = rng.normal(size=dim)
    return v / np.linalg.norm(v)


def generate_synthetic(cfg: SynthConfig) -> tuple[Gallery, list[Tube]]:
    """Generate (gallery, probes); a pure function of the config.

    Gallery tubes come from cameras c0..c{n-2}, probe tubes from the last
    camera. Noisy frames are marked by construction: their quality is drawn
    from [0, 0.3] while clean frames draw from [0.7, 1.0].
    """
    cfg.validate()
    rng = np.random.default_rng(cfg.seed)
    channels = sorted(cfg.dims)

    latents = [
        {ch: _unit(rng, cfg.dims[ch]) for ch in channels}
        for _ in range(cfg.n_identities)
    ]
    # Distractor pairs: nearly coincident in the retrieval channel while the
    # selfsim latents stay separated (independent draws unless a finite
    # selfsim gap is requested for partial-overlap experiments).
    for p in range(cfg.distractor_pairs):
        a, b = latents[2 * p], latents[2 * p + 1]
        for ch, gap in (
            (RETRIEVAL_CHANNEL, cfg.distractor_gap),
            (SELFSIM_CHANNEL, cfg.distractor_selfsim_gap),
        ):
            if ch not in cfg.dims or gap == 0.0:
                continue
            shifted = a[ch] + gap * _unit(rng, cfg.dims[ch])
            b[ch] = shifted / np.linalg.norm(shifted)

    camera_offsets = [
        {
            ch: rng.normal(size=cfg.dims[ch])
            * (cfg.camera_offset_sigma / np.sqrt(cfg.dims[ch]))
            for ch in channels
        }
        for _ in range(cfg.n_cameras)
    ]

    lo, hi = cfg.frames_per_tube_range
    gallery_tubes: list[Tube] = []
    probe_tubes: list[Tube] = []
    for identity in range(cfg.n_identities):
        person_id = f"p{identity:03d}"
        for camera in range(cfg.n_cameras):
            camera_id = f"c{camera}"
            for t in range(cfg.tubes_per_identity_per_camera):
                tube_id = f"{person_id}_{camera_id}_t{t}"
                m = int(rng.integers(lo, hi + 1))
                # Pose drift: the pose latent sweeps through a per-tube plane
                # at a slowly jittering angular speed, so consecutive frames
                # stay pose-similar while distant frames can differ a lot.
                # Every tube covers a material arc regardless of its length,
                # which keeps legitimate pose spread wide relative to noise.
                pose_state = None
                if POSE_CHANNEL in cfg.dims:
                    base = latents[identity][POSE_CHANNEL]
                    ortho = _unit(rng, cfg.dims[POSE_CHANNEL])
                    ortho = ortho - (ortho @ base) * base
                    ortho = ortho / np.linalg.norm(ortho)
                    arc = cfg.pose_drift_sigma * rng.uniform(*POSE_ARC_BAND)
                    speed = (1.0 if rng.random() < 0.5 else -1.0) * arc / m
                    pose_state = [base, ortho, rng.uniform(0.0, 2.0 * np.pi), speed]
                is_probe_side = camera == cfg.n_cameras - 1
                frames: list[FrameRecord] = []
                for i in range(m):
                    noisy = rng.random() < cfg.noise_frame_rate
                    quality = (
                        rng.uniform(0.0, NOISY_QUALITY_MAX)
                        if noisy
                        else rng.uniform(CLEAN_QUALITY_MIN, 1.0)
                    )
                    # Confusion frames are gallery-side only; probes are curated.
                    confused_with = None
                    if (
                        not is_probe_side
                        and cfg.confusion_frame_rate > 0
                        and rng.random() < cfg.confusion_frame_rate
                    ):
                        other = int(rng.integers(cfg.n_identities - 1))
                        confused_with = other + 1 if other >= identity else other
                    embeddings: dict[str, np.ndarray] = {}
                    for ch in channels:
                        dim = cfg.dims[ch]
                        if ch == POSE_CHANNEL:
                            base, ortho, theta, speed = pose_state
                            theta += speed + rng.normal(
                                0.0, POSE_JITTER_FRACTION * abs(speed)
                            )
                            pose_state[2] = theta
                            anchor = np.cos(theta) * base + np.sin(theta) * ortho
                        else:
                            source = confused_with if confused_with is not None else identity
                            anchor = latents[source][ch]
                        vec = (
                            anchor
                            + camera_offsets[camera][ch]
                            + _unit(rng, dim) * cfg.appearance_noise_sigma
                        )
                        if noisy:
                            vec = vec + rng.normal(size=dim) * (
                                CORRUPTION_NORM / np.sqrt(dim)
                            )
                        embeddings[ch] = vec.astype(np.float32)
                    frames.append(
                        FrameRecord(
                            tube_id=tube_id,
                            camera_id=camera_id,
                            frame_index=i,
                            timestamp_ms=i * FRAME_INTERVAL_MS,
                            quality=float(quality),
                            embeddings=embeddings,
                            person_id=person_id,
                        )
                    )
                tube = build_tube(frames)
                if is_probe_side:
                    probe_tubes.append(tube)
                else:
                    gallery_tubes.append(tube)
    return build_gallery(gallery_tubes), probe_tubes


def is_injected_noise(frame: FrameRecord) -> bool:
    """Whether the generator corrupted this frame (quality marks it)."""
    return frame.quality < 0.5

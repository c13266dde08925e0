"""Key-frame query minimization.

Selects a small representative subset of a filtered query tube based on
pairwise pose dissimilarity, and scores any selection with an energy that
charges phi-weighted redundancy inside the selection plus the coverage
cost of everything left out. The production path is a greedy temporal
scan with a novelty rule (a frame joins the selection only if its best
similarity to the frames already selected is below the query threshold
phi); an exhaustive enumerator over small tubes serves as the oracle.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations

import numpy as np

from .errors import ConfigError
from .model import POSE_CHANNEL, Tube, resolve_channel

EXHAUSTIVE_MAX_FRAMES = 16


@dataclass
class MinimizerConfig:
    phi: float = 0.4
    channel: str = POSE_CHANNEL

    def validate(self) -> None:
        if not 0.0 < self.phi < 1.0:
            raise ConfigError("phi must lie strictly between 0 and 1")


@dataclass
class SimilarityMatrix:
    """Symmetric frame-to-frame similarity in [0,1] with unit diagonal."""

    values: np.ndarray

    def __post_init__(self):
        v = self.values
        if v.ndim != 2 or v.shape[0] != v.shape[1]:
            raise ValueError("similarity matrix must be square")
        if not np.array_equal(v, v.T):
            raise ValueError("similarity matrix must be symmetric")
        if not np.all(np.diag(v) == 1.0):
            raise ValueError("similarity matrix diagonal must be 1")
        if v.min() < 0.0 or v.max() > 1.0:
            raise ValueError("similarity entries must lie in [0,1]")

    @property
    def size(self) -> int:
        return self.values.shape[0]


@dataclass
class EnergyBreakdown:
    xi_sum: float
    gamma_sum: float
    total: float


@dataclass
class MinimizedQuery:
    selected: list[int]
    excluded: list[int]
    energy: EnergyBreakdown


def pairwise_similarity(tube: Tube, channel: str = POSE_CHANNEL) -> SimilarityMatrix:
    """Cosine similarity of every frame pair, mapped onto [0,1].

    Normalization divides the gram matrix by sqrt(|e_i|^2 |e_j|^2), so
    bitwise-identical embeddings land exactly on 1.0.
    """
    resolved = resolve_channel(tube.frames[0].embeddings, channel)
    vectors = np.stack([f.embeddings[resolved] for f in tube.frames]).astype(np.float64)
    gram = vectors @ vectors.T
    sq_norms = np.diagonal(gram).copy()
    if np.any(sq_norms == 0.0):
        i = int(np.argmax(sq_norms == 0.0))
        raise ValueError(
            f"zero-norm {resolved} embedding at frame {tube.frames[i].frame_index} "
            f"of tube {tube.tube_id}"
        )
    sim = (1.0 + gram / np.sqrt(np.outer(sq_norms, sq_norms))) * 0.5
    sim = (sim + sim.T) * 0.5
    np.clip(sim, 0.0, 1.0, out=sim)
    np.fill_diagonal(sim, 1.0)
    return SimilarityMatrix(sim)


def greedy_minimize(sim: SimilarityMatrix, cfg: MinimizerConfig) -> MinimizedQuery:
    """Temporal scan with the novelty rule; frame 0 anchors the selection."""
    cfg.validate()
    if sim.size < 1:
        raise ValueError("similarity matrix must cover at least one frame")
    values = sim.values
    selected = [0]
    for j in range(1, sim.size):
        if values[selected, j].max() < cfg.phi:
            selected.append(j)
    excluded = [j for j in range(sim.size) if j not in set(selected)]
    return MinimizedQuery(
        selected=selected,
        excluded=excluded,
        energy=query_energy(sim, selected, cfg),
    )


def query_energy(sim: SimilarityMatrix, selected, cfg: MinimizerConfig) -> EnergyBreakdown:
    """Energy of a selection: phi * redundancy + coverage loss.

    Redundancy charges each selected frame its minimum similarity to its
    selected peers (zero for a singleton); coverage charges each excluded
    frame its maximum similarity to the selection.
    """
    cfg.validate()
    m = sim.size
    raw = [int(i) for i in selected]
    if not raw:
        raise ValueError("selection must be non-empty")
    sel = sorted(set(raw))
    if len(sel) != len(raw):
        raise ValueError("selection indices must be unique")
    if sel[0] < 0 or sel[-1] >= m:
        raise ValueError(f"selection indices must lie in [0, {m - 1}]")

    values = sim.values
    sel_arr = np.array(sel)
    if len(sel) > 1:
        block = values[np.ix_(sel_arr, sel_arr)].copy()
        np.fill_diagonal(block, np.inf)
        xi_sum = float(block.min(axis=1).sum())
    else:
        xi_sum = 0.0

    excluded = np.array([j for j in range(m) if j not in set(sel)], dtype=int)
    if excluded.size:
        gamma_sum = float(values[np.ix_(sel_arr, excluded)].max(axis=0).sum())
    else:
        gamma_sum = 0.0

    return EnergyBreakdown(
        xi_sum=xi_sum,
        gamma_sum=gamma_sum,
        total=cfg.phi * xi_sum + gamma_sum,
    )


def exhaustive_minimize(sim: SimilarityMatrix, cfg: MinimizerConfig) -> MinimizedQuery:
    """Enumerate every subset containing frame 0 and keep the cheapest.

    Ties break toward smaller selections, then lexicographic index order.
    Only valid up to 16 frames (2^m enumeration).
    """
    cfg.validate()
    m = sim.size
    if m > EXHAUSTIVE_MAX_FRAMES:
        raise ValueError(
            f"exhaustive minimization is limited to {EXHAUSTIVE_MAX_FRAMES} frames, got {m}"
        )
    if m < 1:
        raise ValueError("similarity matrix must cover at least one frame")

    best: tuple[float, int, tuple[int, ...]] | None = None
    best_energy: EnergyBreakdown | None = None
    rest = list(range(1, m))
    for size in range(0, m):
        for extra in combinations(rest, size):
            sel = (0, *extra)
            energy = query_energy(sim, sel, cfg)
            key = (energy.total, len(sel), sel)
            if best is None or key < best:
                best = key
                best_energy = energy
    assert best is not None and best_energy is not None
    selected = list(best[2])
    return MinimizedQuery(
        selected=selected,
        excluded=[j for j in range(m) if j not in set(selected)],
        energy=best_energy,
    )


def minimize_tube(
    tube: Tube, cfg: MinimizerConfig, oracle: bool = False
) -> tuple[MinimizedQuery, SimilarityMatrix]:
    """Similarity construction plus selection, as used by the pipeline."""
    sim = pairwise_similarity(tube, cfg.channel)
    if oracle:
        if sim.size > EXHAUSTIVE_MAX_FRAMES:
            raise ValueError(
                f"oracle minimization needs <= {EXHAUSTIVE_MAX_FRAMES} frames, got {sim.size}"
            )
        return exhaustive_minimize(sim, cfg), sim
    return greedy_minimize(sim, cfg), sim

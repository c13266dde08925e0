"""CMC and mAP evaluation, identity-level splits, and the stagewise benchmark.

Rankings are collapsed to identity level before scoring: a probe's ranked
tube or image list maps to persons, keeping each person's first occurrence,
since duplicate tubes of one person would otherwise inflate ranks.
"""

from __future__ import annotations

import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError
from .model import Gallery, Tube, build_gallery, resolve_channel
from .pipeline import PipelineConfig, QueryResult, run_query
from .rerank import RankedTubes
from .retrieval import ImageScorer, ScoredImage

STAGE_NAMES = ("stage1", "stage2", "stage3")


@dataclass
class EvalConfig:
    max_rank: int = 20
    folds: int = 10
    split_fraction: float = 0.5
    seed: int = 0

    def validate(self) -> None:
        if self.max_rank < 1:
            raise ConfigError("max_rank must be >= 1")
        if self.folds < 1:
            raise ConfigError("folds must be >= 1")
        if not 0.0 < self.split_fraction < 1.0:
            raise ConfigError("split_fraction must lie strictly between 0 and 1")


@dataclass
class CmcCurve:
    """values[r-1] = fraction of probes whose identity appears at rank <= r."""

    values: list[float]
    misses: int = 0

    def at(self, rank: int) -> float:
        return self.values[min(rank, len(self.values)) - 1]


def cmc_curve(results: list[tuple[str, list[str]]], max_rank: int) -> CmcCurve:
    """Cumulative matching characteristic over identity-level rankings.

    ``results`` pairs each probe's true person with its ranked identity
    list. Probes whose identity never appears count as misses at every
    rank and are tallied in the diagnostics field.
    """
    if not results:
        raise ValueError("cmc_curve needs at least one probe result")
    hits = np.zeros(max_rank, dtype=np.int64)
    misses = 0
    for person, ranking in results:
        try:
            pos = ranking.index(person) + 1
        except ValueError:
            misses += 1
            continue
        if pos <= max_rank:
            hits[pos - 1] += 1
    cumulative = np.cumsum(hits) / len(results)
    return CmcCurve(values=[float(v) for v in cumulative], misses=misses)


def average_precision(person: str, ranking: list[str], max_rank: int) -> float:
    """AP of one probe over the truncated ranking, in [0,1]."""
    truncated = ranking[:max_rank]
    hit_ranks = [r for r, p in enumerate(truncated, start=1) if p == person]
    if not hit_ranks:
        return 0.0
    relevant = max(1, len(hit_ranks))
    return sum(i / r for i, r in enumerate(hit_ranks, start=1)) / relevant


def mean_ap(results: list[tuple[str, list[str]]], max_rank: int) -> float:
    """Mean average precision over probes, in percent."""
    if not results:
        raise ValueError("mean_ap needs at least one probe result")
    return 100.0 * sum(
        average_precision(person, ranking, max_rank) for person, ranking in results
    ) / len(results)


def split_folds(gallery: Gallery, cfg: EvalConfig) -> list[tuple[set[str], set[str]]]:
    """Seeded identity-disjoint train/test tube splits, one per fold."""
    cfg.validate()
    persons = sorted({t.person_id for t in gallery.tubes if t.person_id is not None})
    if len(persons) != len({t.person_id for t in gallery.tubes}):
        raise ConfigError("identity splits need person_id on every tube")
    if len(persons) < 2:
        raise ConfigError("identity splits need at least 2 identities")

    rng = np.random.default_rng(cfg.seed)
    n_train = min(max(1, round(len(persons) * cfg.split_fraction)), len(persons) - 1)
    folds: list[tuple[set[str], set[str]]] = []
    for _ in range(cfg.folds):
        perm = rng.permutation(len(persons))
        train_persons = {persons[i] for i in perm[:n_train]}
        train = {t.tube_id for t in gallery.tubes if t.person_id in train_persons}
        test = {t.tube_id for t in gallery.tubes if t.person_id not in train_persons}
        folds.append((train, test))
    return folds


def pooled_identity_ranking(
    rows: list[list[ScoredImage]], gallery: Gallery
) -> list[str]:
    """Identity order from all rows pooled by best image score."""
    entries = [
        (-img.score, img.tube_id, img.frame_index, row_i)
        for row_i, row in enumerate(rows)
        for img in row
    ]
    entries.sort()
    seen: set[str] = set()
    ranking: list[str] = []
    for _, tube_id, _, _ in entries:
        person = gallery.person_of(tube_id)
        if person is None:
            raise ValueError(f"tube {tube_id} has no person_id; cannot evaluate")
        if person not in seen:
            seen.add(person)
            ranking.append(person)
    return ranking


def tube_identity_ranking(tubes: RankedTubes, gallery: Gallery) -> list[str]:
    seen: set[str] = set()
    ranking: list[str] = []
    for t in tubes:
        person = gallery.person_of(t.tube_id)
        if person is None:
            raise ValueError(f"tube {t.tube_id} has no person_id; cannot evaluate")
        if person not in seen:
            seen.add(person)
            ranking.append(person)
    return ranking


def stage_rankings(result: QueryResult, gallery: Gallery) -> dict[str, list[str]]:
    return {
        "stage1": pooled_identity_ranking([row for _, row in result.stage1], gallery),
        "stage2": pooled_identity_ranking(result.matrix.rows, gallery),
        "stage3": tube_identity_ranking(result.tubes, gallery),
    }


@dataclass
class StageMetrics:
    cmc: CmcCurve
    map_pct: float


@dataclass
class BenchmarkReport:
    folds: int
    max_rank: int
    n_probes: int
    stages: dict[str, StageMetrics]
    timing: dict[str, float]

    def to_dict(self, include_timing: bool = True) -> dict:
        out: dict = {
            "folds": self.folds,
            "max_rank": self.max_rank,
            "n_probes": self.n_probes,
            "stages": {
                name: {
                    "cmc": m.cmc.values,
                    "cmc_at": {
                        str(r): m.cmc.at(r)
                        for r in (1, 5, 10, 20)
                        if r <= self.max_rank
                    },
                    "map_pct": m.map_pct,
                    "missing_identity_probes": m.cmc.misses,
                }
                for name, m in self.stages.items()
            },
        }
        if include_timing:
            out["timing"] = self.timing
        return out

    def to_csv(self) -> str:
        lines = ["rank," + ",".join(STAGE_NAMES)]
        for r in range(1, self.max_rank + 1):
            row = [str(r)] + [
                repr(self.stages[s].cmc.values[r - 1]) for s in STAGE_NAMES
            ]
            lines.append(",".join(row))
        return "\n".join(lines) + "\n"


def evaluate_stages(
    gallery: Gallery,
    probes: list[Tube],
    pipeline_cfg: PipelineConfig,
    eval_cfg: EvalConfig,
    scorer: ImageScorer | None = None,
    selfsim_scorer: ImageScorer | None = None,
    threads: int = 1,
) -> BenchmarkReport:
    """Run the cascade over all probes and score each stage's ranking."""
    eval_cfg.validate()
    if not probes:
        raise ConfigError("no probes to evaluate")

    def one(probe: Tube) -> tuple[str, dict[str, list[str]], dict[str, float]]:
        if probe.person_id is None:
            raise ValueError(f"probe {probe.tube_id} has no person_id")
        result = run_query(probe, gallery, pipeline_cfg, scorer, selfsim_scorer)
        return probe.person_id, stage_rankings(result, gallery), result.timings

    if threads > 1:
        # Gallery caches are built up-front so worker threads only read.
        gallery.frame_table.channel_matrix(
            resolve_channel(gallery.channel_dims, pipeline_cfg.retrieval.channel)
        )
        gallery.frame_by_key
        gallery.tube_by_id
        with ThreadPoolExecutor(max_workers=threads) as pool:
            outcomes = list(pool.map(one, probes))
    else:
        outcomes = [one(p) for p in probes]

    stages: dict[str, StageMetrics] = {}
    for name in STAGE_NAMES:
        results = [(person, rankings[name]) for person, rankings, _ in outcomes]
        stages[name] = StageMetrics(
            cmc=cmc_curve(results, eval_cfg.max_rank),
            map_pct=mean_ap(results, eval_cfg.max_rank),
        )
    keys = outcomes[0][2].keys()
    timing = {
        f"mean_{key}": float(np.mean([t[key] for _, _, t in outcomes]))
        for key in keys
    }
    timing["mean_query_s"] = timing.pop("mean_total_s")
    return BenchmarkReport(
        folds=1,
        max_rank=eval_cfg.max_rank,
        n_probes=len(probes),
        stages=stages,
        timing=timing,
    )


def run_benchmark(
    gallery: Gallery,
    probes: list[Tube],
    pipeline_cfg: PipelineConfig,
    eval_cfg: EvalConfig,
    scorer: ImageScorer | None = None,
    selfsim_scorer: ImageScorer | None = None,
    threads: int = 1,
) -> BenchmarkReport:
    """Cross-validated stagewise benchmark: average of per-fold evaluations.

    Each fold restricts the gallery to its test identities and evaluates
    the probes of those identities; fold metrics are averaged in fold order.
    """
    eval_cfg.validate()
    folds = split_folds(gallery, eval_cfg)
    reports: list[BenchmarkReport] = []
    for _, test_tube_ids in folds:
        sub_gallery = build_gallery(
            [t for t in gallery.tubes if t.tube_id in test_tube_ids]
        )
        test_persons = {t.person_id for t in sub_gallery.tubes}
        sub_probes = [p for p in probes if p.person_id in test_persons]
        if not sub_probes:
            raise ConfigError("a fold has no probes; check identity overlap")
        reports.append(
            evaluate_stages(
                sub_gallery,
                sub_probes,
                pipeline_cfg,
                eval_cfg,
                scorer,
                selfsim_scorer,
                threads,
            )
        )

    stages: dict[str, StageMetrics] = {}
    for name in STAGE_NAMES:
        curves = np.array([r.stages[name].cmc.values for r in reports])
        stages[name] = StageMetrics(
            cmc=CmcCurve(
                values=[float(v) for v in curves.mean(axis=0)],
                misses=sum(r.stages[name].cmc.misses for r in reports),
            ),
            map_pct=float(np.mean([r.stages[name].map_pct for r in reports])),
        )
    timing_keys = reports[0].timing.keys()
    timing = {
        key: float(np.mean([r.timing[key] for r in reports])) for key in timing_keys
    }
    return BenchmarkReport(
        folds=len(reports),
        max_rank=eval_cfg.max_rank,
        n_probes=sum(r.n_probes for r in reports),
        stages=stages,
        timing=timing,
    )

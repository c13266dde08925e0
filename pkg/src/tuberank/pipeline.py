"""End-to-end query execution: filter, minimize, then the 3-stage cascade."""

from __future__ import annotations

import time
from dataclasses import dataclass, field

from .minimizer import MinimizedQuery, MinimizerConfig, minimize_tube
from .model import Gallery, Tube
from .noise_filter import FilterConfig, filter_tube
from .rerank import (
    FinalRanking,
    RankedTubes,
    ResultMatrix,
    extract_final_images,
    rank_tubes,
    self_similarity_rerank,
)
from .retrieval import ImageScorer, RetrievalConfig, ScoredImage, retrieve_for_query


@dataclass
class PipelineConfig:
    filter: FilterConfig = field(default_factory=FilterConfig)
    minimizer: MinimizerConfig = field(default_factory=MinimizerConfig)
    retrieval: RetrievalConfig = field(default_factory=RetrievalConfig)
    apply_filter: bool = True
    oracle_minimizer: bool = False

    def validate(self) -> None:
        self.filter.validate()
        self.minimizer.validate()
        self.retrieval.validate()


@dataclass
class QueryResult:
    probe_tube_id: str
    kept: Tube
    removed_count: int
    minimized: MinimizedQuery
    stage1: list[tuple[int, list[ScoredImage]]]
    matrix: ResultMatrix
    tubes: RankedTubes
    final: FinalRanking
    timings: dict[str, float]


def run_query(
    probe: Tube,
    gallery: Gallery,
    cfg: PipelineConfig,
    scorer: ImageScorer | None = None,
    selfsim_scorer: ImageScorer | None = None,
) -> QueryResult:
    cfg.validate()
    timings: dict[str, float] = {}
    t0 = time.perf_counter()

    if cfg.apply_filter:
        kept, removed = filter_tube(probe, cfg.filter)
    else:
        kept, removed = probe, []
    t1 = time.perf_counter()
    timings["filter_s"] = t1 - t0

    minimized, _ = minimize_tube(kept, cfg.minimizer, oracle=cfg.oracle_minimizer)
    t2 = time.perf_counter()
    timings["minimize_s"] = t2 - t1

    stage1 = retrieve_for_query(minimized, kept.frames, gallery, cfg.retrieval, scorer)
    t3 = time.perf_counter()
    timings["stage1_s"] = t3 - t2

    matrix = self_similarity_rerank(stage1, kept.frames, gallery, selfsim_scorer)
    t4 = time.perf_counter()
    timings["stage2_s"] = t4 - t3

    tubes = rank_tubes(matrix, gallery)
    final = extract_final_images(matrix, tubes)
    t5 = time.perf_counter()
    timings["stage3_s"] = t5 - t4
    timings["total_s"] = t5 - t0

    return QueryResult(
        probe_tube_id=probe.tube_id,
        kept=kept,
        removed_count=len(removed),
        minimized=minimized,
        stage1=stage1,
        matrix=matrix,
        tubes=tubes,
        final=final,
        timings=timings,
    )

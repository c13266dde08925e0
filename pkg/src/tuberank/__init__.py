"""tuberank: tube-based person re-identification ranking engine."""

__version__ = "0.1.0"

from .errors import (
    ConfigError,
    EmptyGalleryError,
    EmptyQueryError,
    GalleryFormatError,
    TubeRankError,
)
from .evaluation import (
    BenchmarkReport,
    CmcCurve,
    EvalConfig,
    cmc_curve,
    evaluate_stages,
    mean_ap,
    run_benchmark,
    split_folds,
)
from .gallery_io import load_gallery, parse_frame_record, write_gallery
from .minimizer import (
    EnergyBreakdown,
    MinimizedQuery,
    MinimizerConfig,
    SimilarityMatrix,
    exhaustive_minimize,
    greedy_minimize,
    minimize_tube,
    pairwise_similarity,
    query_energy,
)
from .model import FrameRecord, Gallery, Tube, build_gallery, build_tube
from .noise_filter import FilterConfig, filter_tube, outlier_filter, quality_filter
from .pipeline import PipelineConfig, QueryResult, run_query
from .rerank import (
    ResultMatrix,
    TubeScore,
    extract_final_images,
    image_weight,
    rank_tubes,
    self_similarity_rerank,
    tube_weights,
)
from .retrieval import (
    CosineScorer,
    ImageScorer,
    RetrievalConfig,
    ScoredImage,
    cosine_scorer,
    get_scorer,
    retrieve_for_query,
    retrieve_top_k,
)
from .synth import SynthConfig, generate_synthetic

__all__ = [
    "BenchmarkReport",
    "CmcCurve",
    "ConfigError",
    "CosineScorer",
    "EmptyGalleryError",
    "EmptyQueryError",
    "EnergyBreakdown",
    "EvalConfig",
    "FilterConfig",
    "FrameRecord",
    "Gallery",
    "GalleryFormatError",
    "ImageScorer",
    "MinimizedQuery",
    "MinimizerConfig",
    "PipelineConfig",
    "QueryResult",
    "ResultMatrix",
    "RetrievalConfig",
    "ScoredImage",
    "SimilarityMatrix",
    "SynthConfig",
    "Tube",
    "TubeRankError",
    "TubeScore",
    "build_gallery",
    "build_tube",
    "cmc_curve",
    "cosine_scorer",
    "evaluate_stages",
    "exhaustive_minimize",
    "extract_final_images",
    "filter_tube",
    "generate_synthetic",
    "get_scorer",
    "greedy_minimize",
    "image_weight",
    "load_gallery",
    "mean_ap",
    "minimize_tube",
    "outlier_filter",
    "pairwise_similarity",
    "parse_frame_record",
    "quality_filter",
    "query_energy",
    "rank_tubes",
    "retrieve_for_query",
    "retrieve_top_k",
    "run_benchmark",
    "run_query",
    "self_similarity_rerank",
    "split_folds",
    "tube_weights",
    "write_gallery",
]

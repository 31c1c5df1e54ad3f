"""Consensus-threshold writer-dependent signature verification on precomputed feature vectors."""

__version__ = "0.1.0"

from ._kernels import BACKEND
from .baselines import (
    threshold_confidence_interval,
    threshold_max,
    threshold_mean,
    threshold_min,
)
from .consensus import (
    DEFAULT_ALPHA,
    DEFAULT_E_CONSENSUS,
    DEFAULT_E_THRESHOLD,
    STRATEGIES,
    EnrollConfig,
    build_consensus,
    classify,
    compute_threshold,
    enroll,
    score_probe,
    score_probes,
    split_gallery,
)
from .core import (
    Aggregation,
    ConfusionCounts,
    ConsensusSet,
    DegenerateVector,
    DimensionMismatch,
    EmptyMatrix,
    InsufficientSamples,
    Label,
    RateReport,
    SignatureSample,
    SimilarityMatrix,
    SplitSpec,
    ThresholdModel,
    UndefinedRate,
)
from .dataset_io import Dataset, class_feature_stats, generate_synthetic, load_dataset, save_dataset
from .evaluation import ProtocolResult, compare_strategies, confusion, rates, run_protocol, sweep_alpha
from .metric import cosine_similarity, pairwise_matrix

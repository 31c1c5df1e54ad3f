"""Consensus-threshold enrollment and the accept/reject decision.

Enrollment for one writer:

1. randomly split the genuine samples into gallery-a, gallery-b and held-out
   genuine probes;
2. build the gallery-b x gallery-a cosine similarity matrix;
3. keep the entries at or above ``mean - e_consensus`` (the consensus set);
4. threshold = ``mean(kept) - std(kept) / sqrt(len(kept)) * alpha - e_threshold``.

A probe is scored by aggregating its similarity to every gallery reference
and accepted when the score is at least the threshold.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from .baselines import BASELINE_STRATEGIES, baseline_threshold
from .core import (
    Aggregation,
    ConsensusSet,
    DimensionMismatch,
    EmptyMatrix,
    InsufficientSamples,
    InvalidParameter,
    Label,
    ModelParams,
    SignatureSample,
    SimilarityMatrix,
    SplitSpec,
    ThresholdModel,
    mean_std,
)
from .metric import pairwise_matrix, similarities_to_refs

DEFAULT_ALPHA = 0.99999
DEFAULT_E_CONSENSUS = math.exp(-4.0)
DEFAULT_E_THRESHOLD = math.exp(-4.5)

STRATEGIES = BASELINE_STRATEGIES + ("consensus",)


@dataclass(frozen=True)
class EnrollConfig:
    split: SplitSpec = field(default_factory=lambda: SplitSpec(14, 5, 5, 0))
    alpha: float = DEFAULT_ALPHA
    e_consensus: float = DEFAULT_E_CONSENSUS
    e_threshold: float = DEFAULT_E_THRESHOLD
    aggregation: Aggregation = Aggregation.MEAN
    seed: int = 0

    def __post_init__(self):
        if isinstance(self.aggregation, str):
            object.__setattr__(self, "aggregation", Aggregation(self.aggregation.lower()))
        # alpha == 0 is allowed so sweeps can switch the confidence term off
        if not (self.alpha >= 0 and math.isfinite(self.alpha)):
            raise InvalidParameter(f"alpha must be finite and >= 0, got {self.alpha}")
        for name in ("e_consensus", "e_threshold"):
            v = getattr(self, name)
            if not (v > 0 and math.isfinite(v)):
                raise InvalidParameter(f"{name} must be finite and > 0, got {v}")
        if not 0 <= int(self.seed) < 2**64:
            raise InvalidParameter(f"seed must fit in 64 unsigned bits, got {self.seed}")

    @property
    def params(self) -> ModelParams:
        return ModelParams(self.alpha, self.e_consensus, self.e_threshold, self.aggregation)

    def with_(self, **changes) -> "EnrollConfig":
        return replace(self, **changes)


def split_gallery(genuine_samples: Sequence[SignatureSample], split: SplitSpec, seed: int):
    """Random disjoint partition into (gallery_a, gallery_b, probe_genuine).

    Deterministic for a fixed input order and seed. Samples beyond the
    requested sizes are left unused.
    """
    samples = list(genuine_samples)
    writers = {s.writer_id for s in samples}
    writer = next(iter(writers)) if len(writers) == 1 else "?"
    if len(writers) > 1:
        raise InvalidParameter(f"split_gallery got samples from several writers: {sorted(writers)}")
    if any(s.label is not Label.GENUINE for s in samples):
        raise InvalidParameter(f"writer {writer!r}: split_gallery takes genuine samples only")
    need = split.n_genuine_required
    if len(samples) < need:
        raise InsufficientSamples(writer, need, len(samples))
    order = np.random.default_rng(seed).permutation(len(samples))
    a, b = split.n_gallery_a, split.n_gallery_b
    gallery_a = [samples[i] for i in order[:a]]
    gallery_b = [samples[i] for i in order[a:a + b]]
    probes = [samples[i] for i in order[a + b:need]]
    return gallery_a, gallery_b, probes


def build_consensus(matrix: SimilarityMatrix, e_consensus: float = DEFAULT_E_CONSENSUS) -> ConsensusSet:
    entries = matrix.entries if isinstance(matrix, SimilarityMatrix) else np.asarray(matrix, dtype=np.float64)
    if entries.size == 0:
        raise EmptyMatrix("cannot build a consensus set from an empty matrix")
    mu = mean_std(entries.ravel())[0]
    filter_mean = mu - e_consensus
    flat = entries.ravel()  # row-major
    retained = flat[flat >= filter_mean]
    # the maximum entry is >= mu, so this only trips on rounding pathologies
    if retained.size == 0:
        retained = flat[flat == flat.max()]
    return ConsensusSet(tuple(retained.tolist()), filter_mean, mu)


def compute_threshold(consensus: ConsensusSet, alpha: float = DEFAULT_ALPHA,
                      e_threshold: float = DEFAULT_E_THRESHOLD) -> float:
    values = np.asarray(consensus.retained, dtype=np.float64)
    if values.size == 0:
        raise EmptyMatrix("consensus set is empty")
    m = values.size
    mu, sigma = mean_std(values)  # population std, divisor m
    f = (sigma / math.sqrt(m)) * alpha
    return (mu - f) - e_threshold


def fit_threshold(matrix: SimilarityMatrix, strategy: str, config: EnrollConfig):
    """Return (threshold, consensus set or None) for any named strategy."""
    if strategy == "consensus":
        consensus = build_consensus(matrix, config.e_consensus)
        return compute_threshold(consensus, config.alpha, config.e_threshold), consensus
    if strategy in BASELINE_STRATEGIES:
        return baseline_threshold(strategy, matrix, config.alpha), None
    raise InvalidParameter(f"unknown strategy {strategy!r}; expected one of {STRATEGIES}")


@dataclass(frozen=True)
class Enrollment:
    """Everything produced while enrolling one writer."""

    gallery_a: list
    gallery_b: list
    probe_genuine: list
    matrix: SimilarityMatrix

    @property
    def gallery_refs(self) -> np.ndarray:
        return np.stack([s.feature for s in self.gallery_a + self.gallery_b])

    def model(self, strategy: str, config: EnrollConfig) -> ThresholdModel:
        tau, consensus = fit_threshold(self.matrix, strategy, config)
        return ThresholdModel(tau, consensus, config.params, self.gallery_refs,
                              strategy=strategy, writer_id=self.gallery_a[0].writer_id)


def prepare_enrollment(genuine_samples: Sequence[SignatureSample], config: EnrollConfig) -> Enrollment:
    gallery_a, gallery_b, probes = split_gallery(genuine_samples, config.split, config.seed)
    matrix = pairwise_matrix([s.feature for s in gallery_b], [s.feature for s in gallery_a])
    return Enrollment(gallery_a, gallery_b, probes, matrix)


def enroll(genuine_samples: Sequence[SignatureSample], config: EnrollConfig,
           strategy: str = "consensus"):
    """Fit a writer's threshold model; returns ``(model, held_out_genuine_probes)``."""
    enrollment = prepare_enrollment(genuine_samples, config)
    return enrollment.model(strategy, config), enrollment.probe_genuine


def aggregate_scores(similarities: np.ndarray, aggregation: Aggregation) -> np.ndarray:
    """Collapse an (n_probes, n_refs) similarity array to one score per probe."""
    if aggregation is Aggregation.MEAN:
        return similarities.mean(axis=1)
    if aggregation is Aggregation.MAX:
        return similarities.max(axis=1)
    if aggregation is Aggregation.MIN:
        return similarities.min(axis=1)
    raise InvalidParameter(f"unknown aggregation {aggregation!r}")


def score_probes(probes, model: ThresholdModel) -> np.ndarray:
    probes = np.asarray(probes, dtype=np.float64)
    if probes.ndim == 1:
        probes = probes[None, :]
    if probes.shape[1] != model.dimension:
        raise DimensionMismatch(
            f"probe dimension {probes.shape[1]} does not match model dimension {model.dimension}")
    return aggregate_scores(similarities_to_refs(probes, model.gallery_refs), model.params.aggregation)


def score_probe(probe, model: ThresholdModel) -> float:
    probe = np.asarray(probe, dtype=np.float64)
    if probe.ndim != 1:
        raise DimensionMismatch("score_probe takes a single 1-D feature vector")
    return float(score_probes(probe, model)[0])


def classify(score: float, tau_c: float) -> int:
    """1 (genuine) when ``score >= tau_c``, else 0 (forge). Ties accept."""
    if not (math.isfinite(score) and math.isfinite(tau_c)):
        raise InvalidParameter(f"classify needs finite inputs, got score={score}, tau_c={tau_c}")
    return 1 if score >= tau_c else 0


def classify_many(scores: np.ndarray, tau_c: float) -> np.ndarray:
    return (np.asarray(scores) >= tau_c).astype(np.int8)

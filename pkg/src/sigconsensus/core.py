"""Domain types shared across the package.

Everything here is immutable after construction. Feature arrays are stored
as read-only float64 numpy arrays so models and samples can be shared
between worker threads without copying.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Any, Sequence

import numpy as np

FORMAT_VERSION = 1


class SigConsensusError(Exception):
    """Base class for all package errors."""


class DimensionMismatch(SigConsensusError, ValueError):
    pass


class DegenerateVector(SigConsensusError, ValueError):
    pass


class NonFiniteFeature(SigConsensusError, ValueError):
    pass


class EmptyMatrix(SigConsensusError, ValueError):
    pass


class InsufficientSamples(SigConsensusError):
    def __init__(self, writer_id: str, needed: int, available: int, what: str = "genuine",
                 detail: str = ""):
        self.writer_id = writer_id
        self.needed = needed
        self.available = available
        self.shortfall = needed - available
        super().__init__(
            f"writer {writer_id!r}: needs {needed} {what} samples, has {available} "
            f"(short by {self.shortfall})" + (f"; {detail}" if detail else "")
        )


class LengthMismatch(SigConsensusError, ValueError):
    pass


class UndefinedRate(SigConsensusError, ValueError):
    pass


class InvalidParameter(SigConsensusError, ValueError):
    pass


class Label(enum.Enum):
    GENUINE = "G"
    FORGED = "F"

    @classmethod
    def parse(cls, text: str) -> "Label":
        try:
            return cls(text.strip().upper())
        except ValueError:
            raise ValueError(f"unknown label {text!r}, expected 'G' or 'F'") from None


class Aggregation(enum.Enum):
    MEAN = "mean"
    MAX = "max"
    MIN = "min"


def as_feature(values: Any, *, name: str = "feature") -> np.ndarray:
    """Validate and freeze a feature vector.

    Returns a read-only 1-D float64 array. Raises NonFiniteFeature for
    NaN/Inf entries and DegenerateVector for the all-zero vector.
    """
    arr = np.array(values, dtype=np.float64)
    if arr.ndim != 1 or arr.size == 0:
        raise DimensionMismatch(f"{name}: expected a non-empty 1-D vector, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise NonFiniteFeature(f"{name}: contains NaN or Inf")
    if not np.any(arr):
        raise DegenerateVector(f"{name}: all-zero vector has no direction")
    arr.setflags(write=False)
    return arr


def as_feature_matrix(vectors: Any, *, name: str = "vectors") -> np.ndarray:
    """Stack vectors into a read-only (k, n) float64 array."""
    if isinstance(vectors, np.ndarray) and vectors.ndim == 2:
        arr = np.array(vectors, dtype=np.float64)
    else:
        rows = [np.asarray(v, dtype=np.float64) for v in vectors]
        if not rows:
            raise EmptyMatrix(f"{name}: no vectors")
        dims = {r.shape for r in rows}
        if len(dims) != 1:
            raise DimensionMismatch(f"{name}: vectors have differing shapes {sorted(dims)}")
        arr = np.stack(rows)
    if arr.shape[0] == 0 or arr.shape[1] == 0:
        raise EmptyMatrix(f"{name}: empty matrix of shape {arr.shape}")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class SignatureSample:
    writer_id: str
    sample_id: str
    label: Label
    feature: np.ndarray = field(repr=False)

    def __post_init__(self):
        object.__setattr__(self, "feature", as_feature(
            self.feature, name=f"{self.writer_id}/{self.sample_id}"))

    @property
    def dimension(self) -> int:
        return self.feature.shape[0]

    def __eq__(self, other):
        if not isinstance(other, SignatureSample):
            return NotImplemented
        return (self.writer_id == other.writer_id and self.sample_id == other.sample_id
                and self.label is other.label and np.array_equal(self.feature, other.feature))

    __hash__ = None

    def to_dict(self) -> dict:
        return {"writer_id": self.writer_id, "sample_id": self.sample_id,
                "label": self.label.value, "feature": self.feature.tolist()}

    @classmethod
    def from_dict(cls, d: dict) -> "SignatureSample":
        return cls(d["writer_id"], d["sample_id"], Label.parse(d["label"]), d["feature"])


@dataclass(frozen=True)
class SplitSpec:
    """Per-writer sample counts: gallery-a, gallery-b, genuine probes, forged probes."""

    n_gallery_a: int
    n_gallery_b: int
    n_probe_genuine: int
    n_probe_forge: int = 0

    def __post_init__(self):
        for name in ("n_gallery_a", "n_gallery_b", "n_probe_genuine", "n_probe_forge"):
            v = getattr(self, name)
            if isinstance(v, bool) or not isinstance(v, (int, np.integer)) or v < 0:
                raise InvalidParameter(f"{name} must be a non-negative integer, got {v!r}")
        if self.n_gallery_b < 1:
            raise InvalidParameter("n_gallery_b must be >= 1")
        if self.n_gallery_a < self.n_gallery_b:
            raise InvalidParameter(
                f"gallery-a ({self.n_gallery_a}) must be at least as large as gallery-b "
                f"({self.n_gallery_b})")

    @property
    def n_genuine_required(self) -> int:
        return self.n_gallery_a + self.n_gallery_b + self.n_probe_genuine

    @classmethod
    def parse(cls, text: str) -> "SplitSpec":
        """Parse ``"14,5,5"`` or ``"14,5,5,25"``."""
        parts = [p.strip() for p in text.split(",") if p.strip()]
        if len(parts) not in (3, 4):
            raise InvalidParameter(f"split needs 3 or 4 comma-separated counts, got {text!r}")
        try:
            return cls(*(int(p) for p in parts))
        except ValueError:
            raise InvalidParameter(f"split counts must be integers: {text!r}") from None

    def __str__(self) -> str:
        return f"{self.n_gallery_a},{self.n_gallery_b},{self.n_probe_genuine},{self.n_probe_forge}"

    def to_dict(self) -> dict:
        return {"n_gallery_a": self.n_gallery_a, "n_gallery_b": self.n_gallery_b,
                "n_probe_genuine": self.n_probe_genuine, "n_probe_forge": self.n_probe_forge}

    @classmethod
    def from_dict(cls, d: dict) -> "SplitSpec":
        return cls(d["n_gallery_a"], d["n_gallery_b"], d["n_probe_genuine"], d.get("n_probe_forge", 0))


@dataclass(frozen=True)
class SimilarityMatrix:
    """Cosine similarities; rows index gallery-b, columns index gallery-a."""

    entries: np.ndarray = field(repr=False)

    def __post_init__(self):
        arr = np.array(self.entries, dtype=np.float64)
        if arr.ndim != 2 or arr.size == 0:
            raise EmptyMatrix(f"similarity matrix must be non-empty 2-D, got shape {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise NonFiniteFeature("similarity matrix contains NaN or Inf")
        if np.any(arr > 1.0) or np.any(arr < -1.0):
            raise InvalidParameter("similarity entries must lie in [-1, 1]")
        arr.setflags(write=False)
        object.__setattr__(self, "entries", arr)

    @property
    def shape(self) -> tuple[int, int]:
        return self.entries.shape

    def __getitem__(self, idx):
        return self.entries[idx]

    def __eq__(self, other):
        if not isinstance(other, SimilarityMatrix):
            return NotImplemented
        return np.array_equal(self.entries, other.entries)

    __hash__ = None

    def to_dict(self) -> dict:
        return {"entries": self.entries.tolist()}

    @classmethod
    def from_dict(cls, d: dict) -> "SimilarityMatrix":
        return cls(d["entries"])


@dataclass(frozen=True)
class ConsensusSet:
    retained: tuple[float, ...]
    filter_mean: float
    source_mean: float

    def __post_init__(self):
        object.__setattr__(self, "retained", tuple(float(x) for x in self.retained))
        if not self.retained:
            raise EmptyMatrix("consensus set is empty")
        if any(x < self.filter_mean for x in self.retained):
            raise InvalidParameter("retained value below filter mean")

    @property
    def size(self) -> int:
        return len(self.retained)

    def to_dict(self) -> dict:
        return {"retained": list(self.retained), "filter_mean": self.filter_mean,
                "source_mean": self.source_mean}

    @classmethod
    def from_dict(cls, d: dict) -> "ConsensusSet":
        return cls(tuple(d["retained"]), d["filter_mean"], d["source_mean"])


@dataclass(frozen=True)
class ModelParams:
    alpha: float
    e_consensus: float
    e_threshold: float
    aggregation: Aggregation = Aggregation.MEAN

    def to_dict(self) -> dict:
        return {"alpha": self.alpha, "e_consensus": self.e_consensus,
                "e_threshold": self.e_threshold, "aggregation": self.aggregation.value}

    @classmethod
    def from_dict(cls, d: dict) -> "ModelParams":
        return cls(float(d["alpha"]), float(d["e_consensus"]), float(d["e_threshold"]),
                   Aggregation(d.get("aggregation", "mean")))


@dataclass(frozen=True)
class ThresholdModel:
    """A fitted per-writer acceptance threshold plus the references probes are scored against.

    ``consensus`` is None for the baseline strategies, which threshold the raw
    gallery matrix.
    """

    tau_c: float
    consensus: ConsensusSet | None
    params: ModelParams
    gallery_refs: np.ndarray = field(repr=False)
    strategy: str = "consensus"
    writer_id: str | None = None

    def __post_init__(self):
        object.__setattr__(self, "tau_c", float(self.tau_c))
        if not math.isfinite(self.tau_c):
            raise InvalidParameter(f"threshold must be finite, got {self.tau_c}")
        object.__setattr__(self, "gallery_refs", as_feature_matrix(self.gallery_refs, name="gallery_refs"))

    @property
    def dimension(self) -> int:
        return self.gallery_refs.shape[1]

    def __eq__(self, other):
        if not isinstance(other, ThresholdModel):
            return NotImplemented
        return (self.tau_c == other.tau_c and self.consensus == other.consensus
                and self.params == other.params and self.strategy == other.strategy
                and self.writer_id == other.writer_id
                and np.array_equal(self.gallery_refs, other.gallery_refs))

    __hash__ = None

    def to_dict(self) -> dict:
        return {
            "format_version": FORMAT_VERSION,
            "strategy": self.strategy,
            "writer_id": self.writer_id,
            "tau_c": self.tau_c,
            "params": self.params.to_dict(),
            "consensus": None if self.consensus is None else self.consensus.to_dict(),
            "dimension": self.dimension,
            "gallery_refs": self.gallery_refs.tolist(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ThresholdModel":
        version = d.get("format_version")
        if version != FORMAT_VERSION:
            raise InvalidParameter(f"unsupported model format_version {version!r}")
        refs = np.asarray(d["gallery_refs"], dtype=np.float64)
        if refs.ndim != 2 or refs.shape[1] != d["dimension"]:
            raise DimensionMismatch(
                f"gallery_refs shape {refs.shape} disagrees with dimension {d['dimension']}")
        consensus = d.get("consensus")
        return cls(
            tau_c=d["tau_c"],
            consensus=None if consensus is None else ConsensusSet.from_dict(consensus),
            params=ModelParams.from_dict(d["params"]),
            gallery_refs=refs,
            strategy=d.get("strategy", "consensus"),
            writer_id=d.get("writer_id"),
        )


@dataclass(frozen=True)
class ConfusionCounts:
    tp: int = 0
    tn: int = 0
    fp: int = 0
    fn: int = 0

    def __post_init__(self):
        for name in ("tp", "tn", "fp", "fn"):
            v = getattr(self, name)
            if v < 0:
                raise InvalidParameter(f"{name} must be >= 0, got {v}")
            object.__setattr__(self, name, int(v))

    @property
    def total(self) -> int:
        return self.tp + self.tn + self.fp + self.fn

    def __add__(self, other: "ConfusionCounts") -> "ConfusionCounts":
        return ConfusionCounts(self.tp + other.tp, self.tn + other.tn,
                               self.fp + other.fp, self.fn + other.fn)

    def to_dict(self) -> dict:
        return {"tp": self.tp, "tn": self.tn, "fp": self.fp, "fn": self.fn}

    @classmethod
    def from_dict(cls, d: dict) -> "ConfusionCounts":
        return cls(d["tp"], d["tn"], d["fp"], d["fn"])


@dataclass(frozen=True)
class RateReport:
    """Confusion counts with rates in percent."""

    counts: ConfusionCounts
    accuracy: float
    far: float
    frr: float
    aer: float

    def to_dict(self) -> dict:
        return {"counts": self.counts.to_dict(), "accuracy": self.accuracy,
                "far": self.far, "frr": self.frr, "aer": self.aer}

    @classmethod
    def from_dict(cls, d: dict) -> "RateReport":
        return cls(ConfusionCounts.from_dict(d["counts"]), d["accuracy"], d["far"], d["frr"], d["aer"])


def mean_std(values: np.ndarray) -> tuple[float, float]:
    """Mean and population std, with the mean clamped into [min, max].

    Constant input returns ``(value, 0.0)`` exactly; plain ``np.mean`` can
    be off by an ulp there.
    """
    lo, hi = float(values.min()), float(values.max())
    if lo == hi:
        return lo, 0.0
    mu = min(max(float(values.mean()), lo), hi)
    sigma = math.sqrt(float(np.mean((values - mu) ** 2)))
    return mu, sigma


def sum_counts(counts: Sequence[ConfusionCounts]) -> ConfusionCounts:
    total = ConfusionCounts()
    for c in counts:
        total = total + c
    return total

"""Feature datasets on disk, synthetic datasets, and per-class feature statistics.

On-disk layout is a JSON manifest plus one feature file per writer::

    {"format_version": 1, "name": "cedar", "feature_model": "signet",
     "dimension": 2048,
     "writers": [{"writer_id": "1", "genuine_count": 24, "forged_count": 24,
                  "file": "1.csv"}, ...]}

Text feature files hold one sample per line: ``writer_id,sample_id,label,v1,...,vn``
with label ``G`` or ``F`` and floats written with round-trip precision.

Binary feature files start with the magic ``CSV1`` followed by little-endian
uint32 dimension and sample count; each sample is a uint32 byte length and
UTF-8 sample id, one label byte (``G``/``F``), then ``dimension`` float64s.
The writer id comes from the manifest entry.
"""
from __future__ import annotations

import csv
import json
import math
import re
import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator, Sequence

import numpy as np

from .core import (
    FORMAT_VERSION,
    DimensionMismatch,
    InvalidParameter,
    Label,
    NonFiniteFeature,
    SigConsensusError,
    SignatureSample,
    mean_std,
)

BINARY_MAGIC = b"CSV1"


class ParseError(SigConsensusError, ValueError):
    def __init__(self, path, line, message):
        self.path = str(path)
        self.line = line
        super().__init__(f"{path}:{line}: {message}")


class CountMismatch(SigConsensusError, ValueError):
    pass


class EmptyClass(SigConsensusError, ValueError):
    pass


@dataclass(frozen=True)
class WriterEntry:
    writer_id: str
    genuine_count: int
    forged_count: int
    file: str


@dataclass(frozen=True)
class DatasetManifest:
    name: str
    feature_model: str
    dimension: int
    writers: tuple[WriterEntry, ...]
    format_version: int = FORMAT_VERSION

    def to_dict(self) -> dict:
        return {
            "format_version": self.format_version,
            "name": self.name,
            "feature_model": self.feature_model,
            "dimension": self.dimension,
            "writers": [{"writer_id": w.writer_id, "genuine_count": w.genuine_count,
                         "forged_count": w.forged_count, "file": w.file} for w in self.writers],
        }

    @classmethod
    def from_dict(cls, d: dict, path="<manifest>") -> "DatasetManifest":
        try:
            version = d["format_version"]
            if version != FORMAT_VERSION:
                raise ParseError(path, 0, f"unsupported format_version {version!r}")
            writers = tuple(WriterEntry(str(w["writer_id"]), int(w["genuine_count"]),
                                        int(w["forged_count"]), str(w["file"])) for w in d["writers"])
            return cls(str(d["name"]), str(d["feature_model"]), int(d["dimension"]), writers, version)
        except (KeyError, TypeError, ValueError) as exc:
            if isinstance(exc, ParseError):
                raise
            raise ParseError(path, 0, f"malformed manifest: {exc!r}") from None


@dataclass(frozen=True)
class Dataset:
    """Labelled samples plus the metadata needed to report on them."""

    name: str
    feature_model: str
    samples: tuple[SignatureSample, ...] = field(repr=False)

    def __post_init__(self):
        samples = tuple(self.samples)
        object.__setattr__(self, "samples", samples)
        dims = {s.dimension for s in samples}
        if len(dims) > 1:
            raise DimensionMismatch(f"dataset {self.name!r} mixes dimensions {sorted(dims)}")
        seen = set()
        for s in samples:
            key = (s.writer_id, s.sample_id)
            if key in seen:
                raise InvalidParameter(f"duplicate sample {key} in dataset {self.name!r}")
            seen.add(key)

    @property
    def dimension(self) -> int:
        return self.samples[0].dimension if self.samples else 0

    @property
    def writer_ids(self) -> list[str]:
        return sorted({s.writer_id for s in self.samples})

    def writer(self, writer_id: str) -> list[SignatureSample]:
        return [s for s in self.samples if s.writer_id == writer_id]

    def scaled(self, factor: float) -> "Dataset":
        return Dataset(self.name, self.feature_model,
                       tuple(SignatureSample(s.writer_id, s.sample_id, s.label, s.feature * factor)
                             for s in self.samples))

    def __iter__(self) -> Iterator[SignatureSample]:
        return iter(self.samples)

    def __len__(self) -> int:
        return len(self.samples)

    def __eq__(self, other):
        if not isinstance(other, Dataset):
            return NotImplemented
        return (self.name, self.feature_model) == (other.name, other.feature_model) \
            and self.samples == other.samples

    __hash__ = None


# ---------------------------------------------------------------- text format

def _make_sample(path, line, writer_id, sample_id, label_text, values, dimension) -> SignatureSample:
    try:
        label = Label.parse(label_text)
    except ValueError as exc:
        raise ParseError(path, line, str(exc)) from None
    if len(values) != dimension:
        raise DimensionMismatch(
            f"{path}:{line}: sample {writer_id}/{sample_id} has {len(values)} features, "
            f"expected {dimension}")
    arr = np.asarray(values, dtype=np.float64)
    if not np.all(np.isfinite(arr)):
        raise NonFiniteFeature(f"{path}:{line}: sample {writer_id}/{sample_id} has NaN or Inf")
    try:
        return SignatureSample(writer_id, sample_id, label, arr)
    except SigConsensusError as exc:
        raise type(exc)(f"{path}:{line}: {exc}") from None


def read_text_features(path, dimension: int) -> list[SignatureSample]:
    samples = []
    with open(path, newline="") as fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            if not row or (len(row) == 1 and not row[0].strip()):
                continue
            if len(row) < 4:
                raise ParseError(path, lineno, "expected writer_id,sample_id,label,features...")
            try:
                values = [float(x) for x in row[3:]]
            except ValueError as exc:
                raise ParseError(path, lineno, f"bad feature value: {exc}") from None
            samples.append(_make_sample(path, lineno, row[0], row[1], row[2], values, dimension))
    return samples


def write_text_features(path, samples: Sequence[SignatureSample]) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        for s in samples:
            writer.writerow([s.writer_id, s.sample_id, s.label.value, *map(repr, s.feature.tolist())])


# -------------------------------------------------------------- binary format

def read_binary_features(path, dimension: int, writer_id: str) -> list[SignatureSample]:
    data = Path(path).read_bytes()
    if data[:4] != BINARY_MAGIC:
        raise ParseError(path, 0, "missing CSV1 magic")
    try:
        file_dim, count = struct.unpack_from("<II", data, 4)
    except struct.error:
        raise ParseError(path, 0, "truncated header") from None
    if file_dim != dimension:
        raise DimensionMismatch(f"{path}: file dimension {file_dim}, manifest says {dimension}")
    pos = 12
    samples = []
    for i in range(count):
        try:
            (id_len,) = struct.unpack_from("<I", data, pos)
            pos += 4
            sample_id = data[pos:pos + id_len].decode("utf-8")
            pos += id_len
            label_text = chr(data[pos])
            pos += 1
            values = np.frombuffer(data, dtype="<f8", count=dimension, offset=pos).astype(np.float64)
            pos += 8 * dimension
        except (struct.error, IndexError, ValueError, UnicodeDecodeError) as exc:
            raise ParseError(path, i + 1, f"truncated or corrupt record: {exc}") from None
        samples.append(_make_sample(path, i + 1, writer_id, sample_id, label_text, values, dimension))
    if pos != len(data):
        raise ParseError(path, count, f"{len(data) - pos} trailing bytes after {count} records")
    return samples


def write_binary_features(path, samples: Sequence[SignatureSample]) -> None:
    dimension = samples[0].dimension if samples else 0
    parts = [BINARY_MAGIC, struct.pack("<II", dimension, len(samples))]
    for s in samples:
        sid = s.sample_id.encode("utf-8")
        parts.append(struct.pack("<I", len(sid)))
        parts.append(sid)
        parts.append(s.label.value.encode("ascii"))
        parts.append(s.feature.astype("<f8").tobytes())
    Path(path).write_bytes(b"".join(parts))


def read_feature_file(path, dimension: int, writer_id: str) -> list[SignatureSample]:
    with open(path, "rb") as fh:
        head = fh.read(4)
    if head == BINARY_MAGIC:
        return read_binary_features(path, dimension, writer_id)
    return read_text_features(path, dimension)


# ------------------------------------------------------------------ manifests

def load_manifest(path) -> DatasetManifest:
    try:
        with open(path) as fh:
            raw = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ParseError(path, exc.lineno, exc.msg) from None
    return DatasetManifest.from_dict(raw, path)


def load_dataset(manifest_path) -> Dataset:
    """Load a dataset from its manifest file or the directory holding ``manifest.json``."""
    manifest_path = manifest_path_for(manifest_path)
    manifest = load_manifest(manifest_path)
    samples = []
    for entry in manifest.writers:
        path = manifest_path.parent / entry.file
        rows = read_feature_file(path, manifest.dimension, entry.writer_id)
        for s in rows:
            if s.writer_id != entry.writer_id:
                raise ParseError(path, 0, f"sample {s.sample_id} belongs to writer {s.writer_id!r}, "
                                          f"manifest entry is {entry.writer_id!r}")
        n_gen = sum(s.label is Label.GENUINE for s in rows)
        n_forg = len(rows) - n_gen
        if (n_gen, n_forg) != (entry.genuine_count, entry.forged_count):
            raise CountMismatch(
                f"{path}: writer {entry.writer_id!r} has {n_gen} genuine / {n_forg} forged, "
                f"manifest declares {entry.genuine_count} / {entry.forged_count}")
        samples.extend(rows)
    return Dataset(manifest.name, manifest.feature_model, tuple(samples))


def _safe_filename(writer_id: str) -> str:
    return re.sub(r"[^A-Za-z0-9._-]", "_", writer_id) or "writer"


def save_dataset(dataset: Dataset, directory, fmt: str = "text", manifest_name: str = "manifest.json") -> Path:
    """Write ``dataset`` as a manifest plus per-writer files; returns the manifest path."""
    if fmt not in ("text", "binary"):
        raise InvalidParameter(f"unknown format {fmt!r}; expected 'text' or 'binary'")
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    ext = ".csv" if fmt == "text" else ".bin"
    entries = []
    used = set()
    for writer_id in dataset.writer_ids:
        rows = dataset.writer(writer_id)
        fname = _safe_filename(writer_id)
        while fname + ext in used:
            fname += "_"
        used.add(fname + ext)
        if fmt == "text":
            write_text_features(directory / (fname + ext), rows)
        else:
            write_binary_features(directory / (fname + ext), rows)
        n_gen = sum(s.label is Label.GENUINE for s in rows)
        entries.append(WriterEntry(writer_id, n_gen, len(rows) - n_gen, fname + ext))
    manifest = DatasetManifest(dataset.name, dataset.feature_model, dataset.dimension, tuple(entries))
    path = directory / manifest_name
    with open(path, "w") as fh:
        json.dump(manifest.to_dict(), fh, indent=2)
        fh.write("\n")
    return path


# ------------------------------------------------------------------ synthetic

def generate_synthetic(num_writers: int, n_genuine: int, n_forge: int, dim: int,
                       genuine_spread: float, forge_offset: float, seed: int,
                       name: str = "synthetic") -> Dataset:
    """Writers as noisy clusters around random unit prototypes.

    Genuine samples are ``prototype + noise``; forgeries are
    ``prototype + forge_offset * q + noise`` with ``q`` a random unit vector
    orthogonal to the prototype. Noise is isotropic Gaussian with per-coordinate
    std ``genuine_spread / sqrt(dim)``, so its expected norm is about
    ``genuine_spread`` at any dimension.
    """
    for pname, v in (("num_writers", num_writers), ("n_genuine", n_genuine), ("n_forge", n_forge)):
        if int(v) < 1:
            raise InvalidParameter(f"{pname} must be >= 1, got {v}")
    if dim < 2:
        raise InvalidParameter(f"dim must be >= 2, got {dim}")
    if not genuine_spread > 0:
        raise InvalidParameter(f"genuine_spread must be > 0, got {genuine_spread}")
    if not forge_offset >= 0:
        raise InvalidParameter(f"forge_offset must be >= 0, got {forge_offset}")

    rng = np.random.default_rng(seed)
    noise_scale = genuine_spread / math.sqrt(dim)
    width = len(str(num_writers))
    samples = []
    for w in range(num_writers):
        writer_id = f"w{w + 1:0{max(width, 3)}d}"
        proto = rng.standard_normal(dim)
        proto /= np.linalg.norm(proto)
        q = rng.standard_normal(dim)
        q -= (q @ proto) * proto
        q /= np.linalg.norm(q)
        forge_centre = proto + forge_offset * q
        gen = proto + noise_scale * rng.standard_normal((n_genuine, dim))
        forg = forge_centre + noise_scale * rng.standard_normal((n_forge, dim))
        samples.extend(SignatureSample(writer_id, f"g{i + 1:02d}", Label.GENUINE, v) for i, v in enumerate(gen))
        samples.extend(SignatureSample(writer_id, f"f{i + 1:02d}", Label.FORGED, v) for i, v in enumerate(forg))
    return Dataset(name, "synthetic", tuple(samples))


# ------------------------------------------------------------------ statistics

@dataclass(frozen=True)
class ClassStats:
    """Mean and population std over every scalar feature value of each class."""

    mean: dict
    std: dict
    counts: dict

    @property
    def mean_difference(self) -> float:
        return abs(self.mean[Label.FORGED] - self.mean[Label.GENUINE])

    @property
    def std_difference(self) -> float:
        return abs(self.std[Label.FORGED] - self.std[Label.GENUINE])


def class_feature_stats(samples: Iterable[SignatureSample],
                        labels: Sequence[Label] = (Label.GENUINE, Label.FORGED)) -> ClassStats:
    samples = list(samples)
    mean, std, counts = {}, {}, {}
    for label in labels:
        rows = [s.feature for s in samples if s.label is label]
        if not rows:
            raise EmptyClass(f"no {label.name.lower()} samples to summarize")
        # sorted pooling keeps the result independent of sample order
        pooled = np.sort(np.concatenate(rows))
        mean[label], std[label] = mean_std(pooled)
        counts[label] = len(rows)
    return ClassStats(mean, std, counts)


# ------------------------------------------------------------------ converter

_EXPORT_NAME = re.compile(
    r"^(?P<kind>real|genuine|gen|forg|forged|forgery|forgeries)[_-]?(?P<writer>[A-Za-z0-9]+)"
    r"\.(?P<ext>mat|npy|csv|txt)$", re.IGNORECASE)


def _load_export_matrix(path: Path) -> np.ndarray:
    ext = path.suffix.lower()
    if ext == ".npy":
        arr = np.load(path)
    elif ext in (".csv", ".txt"):
        arr = np.loadtxt(path, delimiter="," if ext == ".csv" else None, ndmin=2)
    else:
        from scipy.io import loadmat  # only needed for .mat exports

        contents = {k: v for k, v in loadmat(path).items() if not k.startswith("__")}
        key = "features" if "features" in contents else None
        if key is None:
            numeric = [k for k, v in contents.items()
                       if isinstance(v, np.ndarray) and v.ndim == 2 and v.dtype.kind in "fiu"]
            if not numeric:
                raise ParseError(path, 0, "no 2-D numeric array in .mat export")
            key = max(numeric, key=lambda k: contents[k].size)
        arr = contents[key]
    arr = np.asarray(arr, dtype=np.float64)
    if arr.ndim == 1:
        arr = arr[None, :]
    return arr


def convert_feature_exports(source_dir, name: str, feature_model: str) -> Dataset:
    """Best-effort import of per-writer feature exports.

    Expects files named like ``real_12.mat`` / ``forg_12.mat`` (also
    ``genuine``/``forged`` prefixes and ``.npy``/``.csv``/``.txt``), each
    holding one feature vector per row. Unrecognised files are ignored.
    """
    source_dir = Path(source_dir)
    samples = []
    found = 0
    for path in sorted(source_dir.iterdir(), key=lambda p: p.name):
        m = _EXPORT_NAME.match(path.name)
        if not m:
            continue
        found += 1
        kind = m["kind"].lower()
        label = Label.GENUINE if kind in ("real", "genuine", "gen") else Label.FORGED
        writer_id = m["writer"]
        prefix = "g" if label is Label.GENUINE else "f"
        for i, row in enumerate(_load_export_matrix(path)):
            samples.append(SignatureSample(writer_id, f"{prefix}{i + 1:02d}", label, row))
    if not found:
        raise ParseError(source_dir, 0, "no recognisable feature export files")
    samples.sort(key=lambda s: (_natural_key(s.writer_id), s.label.value != "G", s.sample_id))
    return Dataset(name, feature_model, tuple(samples))


def _natural_key(text: str):
    return [int(t) if t.isdigit() else t for t in re.split(r"(\d+)", text)]


def first_writer(dataset_or_manifest) -> str:
    """Writer id listed first in manifest order (or lowest in natural order for datasets)."""
    if isinstance(dataset_or_manifest, DatasetManifest):
        return dataset_or_manifest.writers[0].writer_id
    return min(dataset_or_manifest.writer_ids, key=_natural_key)


def manifest_path_for(path) -> Path:
    p = Path(path)
    return p / "manifest.json" if p.is_dir() else p



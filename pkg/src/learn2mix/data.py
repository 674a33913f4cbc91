"""Class-partitioned datasets: construction, synthesis, imbalancing, CSV ingest.

A dataset here is always the pair (per-class stores J_i, fixed proportions
alpha_tilde), because every training strategy in this package composes
batches from per-class stores rather than from a flat sample list. The
fixed proportions are derived from store sizes on access, so they are exact
by construction.

All generators draw from per-(seed, class) RNG streams, which makes dataset
content independent of generation order and safe to parallelize per class.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from ._streams import (
    DOMAIN_DATA_TEST,
    DOMAIN_DATA_TRAIN,
    DOMAIN_IMBALANCE,
    stream,
)
from .errors import (
    DimensionMismatch,
    EmptyClass,
    InvalidSize,
    MissingColumn,
    NonNumericFeature,
    ParseError,
)

MEAN_ESTIMATION_DIM = 10
MEAN_ESTIMATION_CLASSES = 4
MEAN_ESTIMATION_SIZES = (1000, 1000, 800, 200)
# Half-width of the uniform class's support around its mean. Wide enough that
# the uniform class is far noisier than the other three (per-sample variance
# w^2/3 ~ 33 vs ~1), yet narrow enough that a 10-sample mean pins the label to
# a few units of error, keeping the balanced test MSE of a trained network in
# the low single digits.
MEAN_ESTIMATION_UNIFORM_HALF_WIDTH = 10.0


@dataclass(frozen=True)
class Sample:
    """One labelled example: feature vector, label vector, class index."""

    features: np.ndarray
    label: np.ndarray
    class_id: int


@dataclass(frozen=True)
class ClassStore:
    """Immutable per-class arrays: features (n, d) and labels (n, k_out)."""

    features: np.ndarray
    labels: np.ndarray

    def __post_init__(self):
        f = np.ascontiguousarray(np.atleast_2d(np.asarray(self.features, dtype=np.float64)))
        l = np.ascontiguousarray(np.atleast_2d(np.asarray(self.labels, dtype=np.float64)))
        if f.shape[0] != l.shape[0]:
            raise DimensionMismatch(
                f"features have {f.shape[0]} rows but labels have {l.shape[0]}"
            )
        if not (np.isfinite(f).all() and np.isfinite(l).all()):
            raise ValueError("samples must be finite (no NaN/Inf)")
        f.setflags(write=False)
        l.setflags(write=False)
        object.__setattr__(self, "features", f)
        object.__setattr__(self, "labels", l)

    def __len__(self) -> int:
        return self.features.shape[0]


@dataclass(frozen=True)
class ClassPartitionedDataset:
    """The dataset J split into k nonempty per-class stores J_i.

    fixed_proportions is the simplex vector alpha_tilde with
    alpha_tilde_i = |J_i| / N, computed exactly from store sizes.
    """

    classes: tuple[ClassStore, ...]

    def __post_init__(self):
        stores = tuple(self.classes)
        if not stores:
            raise EmptyClass(0, "dataset has no classes")
        d = stores[0].features.shape[1]
        k_out = stores[0].labels.shape[1]
        for i, s in enumerate(stores):
            if len(s) == 0:
                raise EmptyClass(i)
            if s.features.shape[1] != d:
                raise DimensionMismatch(
                    f"class {i} features have dim {s.features.shape[1]}, expected {d}"
                )
            if s.labels.shape[1] != k_out:
                raise DimensionMismatch(
                    f"class {i} labels have dim {s.labels.shape[1]}, expected {k_out}"
                )
        object.__setattr__(self, "classes", stores)

    @property
    def num_classes(self) -> int:
        return len(self.classes)

    @property
    def feature_dim(self) -> int:
        return self.classes[0].features.shape[1]

    @property
    def label_dim(self) -> int:
        return self.classes[0].labels.shape[1]

    @property
    def class_counts(self) -> np.ndarray:
        return np.array([len(s) for s in self.classes], dtype=np.int64)

    @property
    def n_total(self) -> int:
        return int(self.class_counts.sum())

    @property
    def fixed_proportions(self) -> np.ndarray:
        counts = self.class_counts
        return counts / counts.sum()

    def pooled(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Concatenate all stores class-major: (features, labels, class_ids)."""
        feats = np.concatenate([s.features for s in self.classes])
        labels = np.concatenate([s.labels for s in self.classes])
        ids = np.concatenate(
            [np.full(len(s), i, dtype=np.int64) for i, s in enumerate(self.classes)]
        )
        return feats, labels, ids


def from_class_arrays(
    features_per_class: Sequence[np.ndarray], labels_per_class: Sequence[np.ndarray]
) -> ClassPartitionedDataset:
    """Build a dataset directly from per-class feature/label arrays."""
    if len(features_per_class) != len(labels_per_class):
        raise DimensionMismatch("feature and label lists have different lengths")
    stores = tuple(
        ClassStore(f, l) for f, l in zip(features_per_class, labels_per_class)
    )
    return ClassPartitionedDataset(stores)


def partition_by_class(samples: Sequence[Sample], k: int) -> ClassPartitionedDataset:
    """Partition samples into k per-class stores, preserving input order.

    Raises EmptyClass(i) if class i has no samples, DimensionMismatch if
    feature or label dimensions vary, InvalidSize for class ids outside [0, k).
    """
    if k < 1:
        raise InvalidSize(f"k must be >= 1, got {k}")
    buckets_f: list[list[np.ndarray]] = [[] for _ in range(k)]
    buckets_l: list[list[np.ndarray]] = [[] for _ in range(k)]
    d = None
    k_out = None
    for s in samples:
        cid = int(s.class_id)
        if not 0 <= cid < k:
            raise InvalidSize(f"class_id {cid} outside [0, {k})")
        f = np.asarray(s.features, dtype=np.float64).reshape(-1)
        l = np.asarray(s.label, dtype=np.float64).reshape(-1)
        if d is None:
            d, k_out = f.shape[0], l.shape[0]
        if f.shape[0] != d:
            raise DimensionMismatch(f"feature dim {f.shape[0]} != {d}")
        if l.shape[0] != k_out:
            raise DimensionMismatch(f"label dim {l.shape[0]} != {k_out}")
        buckets_f[cid].append(f)
        buckets_l[cid].append(l)
    for i in range(k):
        if not buckets_f[i]:
            raise EmptyClass(i)
    return from_class_arrays(
        [np.stack(b) for b in buckets_f], [np.stack(b) for b in buckets_l]
    )


def mean_estimation_features(
    class_id: int, mu: np.ndarray, rng: np.random.Generator, d: int = MEAN_ESTIMATION_DIM
) -> np.ndarray:
    """Draw the feature matrix (n, d) for one mean-estimation class.

    Each row is d i.i.d. draws from the class distribution with per-row mean
    mu. Class 0: normal(mu, 1). Class 1: exponential with mean mu. Class 2:
    chi-squared with mean mu, realized as Gamma(shape=mu/2, scale=2) so
    fractional means are well defined. Class 3: uniform on
    [mu - w, mu + w] with w = MEAN_ESTIMATION_UNIFORM_HALF_WIDTH.
    """
    col = np.asarray(mu, dtype=np.float64)[:, None]
    if class_id == 0:
        return rng.normal(col, 1.0, size=(col.shape[0], d))
    if class_id == 1:
        return rng.exponential(col, size=(col.shape[0], d))
    if class_id == 2:
        return rng.gamma(col / 2.0, 2.0, size=(col.shape[0], d))
    if class_id == 3:
        w = MEAN_ESTIMATION_UNIFORM_HALF_WIDTH
        return rng.uniform(col - w, col + w, size=(col.shape[0], d))
    raise InvalidSize(f"mean-estimation class_id must be in [0, 4), got {class_id}")


def _mean_estimation_class(class_id: int, n: int, rng: np.random.Generator):
    lo, hi = (20.0, 50.0) if class_id == 3 else (0.0, 1.0)
    mu = rng.uniform(lo, hi, size=n)
    feats = mean_estimation_features(class_id, mu, rng)
    return feats, mu[:, None]


def make_mean_estimation(
    seed: int,
    sizes: Sequence[int] = MEAN_ESTIMATION_SIZES,
    test_per_class: int = 1000,
) -> tuple[ClassPartitionedDataset, ClassPartitionedDataset]:
    """Generate the 4-class mean-estimation regression benchmark.

    Labels are the generating distribution means themselves (stored exactly,
    not estimated from the draws). The train split is imbalanced per
    `sizes`; the test split is balanced with `test_per_class` per class.

    Returns (train, test).
    """
    sizes = tuple(int(s) for s in sizes)
    if len(sizes) != MEAN_ESTIMATION_CLASSES:
        raise InvalidSize(f"sizes must have {MEAN_ESTIMATION_CLASSES} entries")
    if any(s < 1 for s in sizes) or test_per_class < 1:
        raise InvalidSize("all class sizes must be >= 1")

    def build(domain: int, counts: Sequence[int]) -> ClassPartitionedDataset:
        feats, labels = [], []
        for cid, n in enumerate(counts):
            f, l = _mean_estimation_class(cid, n, stream(seed, domain, cid))
            feats.append(f)
            labels.append(l)
        return from_class_arrays(feats, labels)

    train = build(DOMAIN_DATA_TRAIN, sizes)
    test = build(DOMAIN_DATA_TEST, [test_per_class] * MEAN_ESTIMATION_CLASSES)
    return train, test


def make_gaussian_blobs(
    seed: int,
    k: int,
    per_class_counts: Sequence[int],
    d: int,
    separation: float,
    split: str = "train",
) -> ClassPartitionedDataset:
    """Generate a k-class Gaussian-blob classification dataset.

    Class i is centered at separation * e_(i mod d) with unit isotropic
    noise; labels are one-hot. Centers depend only on (k, d, separation),
    so the "train" and "test" splits (independent RNG streams under the
    same seed) share geometry. separation=0 is allowed and makes the
    classes indistinguishable.
    """
    if k < 2:
        raise InvalidSize(f"k must be >= 2, got {k}")
    if d < 1:
        raise InvalidSize(f"d must be >= 1, got {d}")
    if separation < 0:
        raise InvalidSize(f"separation must be >= 0, got {separation}")
    if split not in ("train", "test"):
        raise InvalidSize(f"split must be 'train' or 'test', got {split!r}")
    domain = DOMAIN_DATA_TRAIN if split == "train" else DOMAIN_DATA_TEST
    counts = tuple(int(c) for c in per_class_counts)
    if len(counts) != k:
        raise InvalidSize(f"per_class_counts must have k={k} entries")
    if any(c < 1 for c in counts):
        raise InvalidSize("all class counts must be >= 1")
    eye = np.eye(k, dtype=np.float64)
    feats, labels = [], []
    for cid, n in enumerate(counts):
        center = np.zeros(d)
        center[cid % d] = separation
        rng = stream(seed, domain, cid)
        feats.append(rng.normal(center, 1.0, size=(n, d)))
        labels.append(np.tile(eye[cid], (n, 1)))
    return from_class_arrays(feats, labels)


@dataclass(frozen=True)
class ImbalanceSpec:
    """Retention-fraction rule applied per class by apply_imbalance.

    kind "linear": epsilon_i = 1 - 0.1*i for 1-indexed class i (clamped at
    0; the retained count is floored at 1 sample downstream). kind
    "logarithmic": epsilon_i = 40**(-i/k), 1-indexed. kind
    "per_class_factor": an explicit vector of fractions in (0, 1].
    """

    kind: str
    factors: tuple[float, ...] | None = None

    def __post_init__(self):
        if self.kind not in ("linear", "logarithmic", "per_class_factor"):
            raise InvalidSize(f"unknown imbalance kind {self.kind!r}")
        if self.kind == "per_class_factor":
            if self.factors is None:
                raise InvalidSize("per_class_factor requires an explicit factor vector")
            fac = tuple(float(f) for f in self.factors)
            if any(not 0.0 < f <= 1.0 for f in fac):
                raise InvalidSize("retention fractions must lie in (0, 1]")
            object.__setattr__(self, "factors", fac)

    def retention_fractions(self, k: int) -> np.ndarray:
        i = np.arange(1, k + 1, dtype=np.float64)
        if self.kind == "linear":
            return np.maximum(1.0 - 0.1 * i, 0.0)
        if self.kind == "logarithmic":
            return 40.0 ** (-i / k)
        if len(self.factors) != k:
            raise InvalidSize(f"factor vector has {len(self.factors)} entries, need {k}")
        return np.array(self.factors, dtype=np.float64)


def apply_imbalance(
    ds: ClassPartitionedDataset, spec: ImbalanceSpec, seed: int
) -> ClassPartitionedDataset:
    """Subsample each class i to round(epsilon_i * |J_i|) samples (min 1).

    Samples are chosen uniformly without replacement per class, with
    relative order preserved, so epsilon = 1 returns identical stores.
    Rounding is half-up.
    """
    eps = spec.retention_fractions(ds.num_classes)
    feats, labels = [], []
    for cid, store in enumerate(ds.classes):
        n = len(store)
        m = max(1, int(np.floor(eps[cid] * n + 0.5)))
        if m >= n:
            keep = np.arange(n)
        else:
            rng = stream(seed, DOMAIN_IMBALANCE, cid)
            keep = np.sort(rng.choice(n, size=m, replace=False))
        feats.append(store.features[keep])
        labels.append(store.labels[keep])
    return from_class_arrays(feats, labels)


@dataclass(frozen=True)
class CsvSchema:
    """Parsing options for load_csv."""

    delimiter: str = ","
    feature_columns: tuple[str, ...] | None = None


def load_csv(
    path: str | Path,
    label_column: str,
    class_column: str,
    schema: CsvSchema = CsvSchema(),
) -> ClassPartitionedDataset:
    """Load a class-partitioned dataset from a delimited text file.

    The header row is required. Classes are the distinct values of
    class_column, ordered by sorted string value; labels are the (numeric)
    label_column as length-1 vectors; features are every remaining column
    unless schema.feature_columns names them explicitly.
    """
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh, delimiter=schema.delimiter)
        try:
            header = next(reader)
        except StopIteration:
            raise ParseError(1, "file is empty, header row required") from None
        for name in (label_column, class_column):
            if name not in header:
                raise MissingColumn(name)
        if schema.feature_columns is not None:
            feature_names = list(schema.feature_columns)
            for name in feature_names:
                if name not in header:
                    raise MissingColumn(name)
        else:
            feature_names = [c for c in header if c not in (label_column, class_column)]
        col_index = {c: header.index(c) for c in header}
        feat_idx = [col_index[c] for c in feature_names]
        label_idx = col_index[label_column]
        class_idx = col_index[class_column]

        rows_by_class: dict[str, list[tuple[list[float], float]]] = {}
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(header):
                raise ParseError(lineno, f"expected {len(header)} fields, got {len(row)}")
            feats = []
            for j, name in zip(feat_idx, feature_names):
                try:
                    feats.append(float(row[j]))
                except ValueError:
                    raise NonNumericFeature(lineno, name) from None
            try:
                label = float(row[label_idx])
            except ValueError:
                raise NonNumericFeature(lineno, label_column) from None
            rows_by_class.setdefault(row[class_idx], []).append((feats, label))

    if not rows_by_class:
        raise EmptyClass(0, "file has a header but no data rows")
    feats_per_class, labels_per_class = [], []
    for value in sorted(rows_by_class):
        rows = rows_by_class[value]
        feats_per_class.append(np.array([r[0] for r in rows], dtype=np.float64))
        labels_per_class.append(np.array([[r[1]] for r in rows], dtype=np.float64))
    return from_class_arrays(feats_per_class, labels_per_class)


def write_dataset_csv(
    ds: ClassPartitionedDataset, path: str | Path, delimiter: str = ","
) -> None:
    """Write a dataset as f0..f{d-1},label,class rows (header included).

    Scalar labels are written in full shortest-roundtrip precision; one-hot
    labels are written as their argmax index. Rows appear class-major in
    store order, so output is byte-deterministic for a given dataset.
    """
    path = Path(path)
    d = ds.feature_dim
    scalar = ds.label_dim == 1
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, delimiter=delimiter, lineterminator="\n")
        writer.writerow([f"f{j}" for j in range(d)] + ["label", "class"])
        for cid, store in enumerate(ds.classes):
            for row, label in zip(store.features, store.labels):
                lab = repr(float(label[0])) if scalar else str(int(np.argmax(label)))
                writer.writerow([repr(float(v)) for v in row] + [lab, str(cid)])

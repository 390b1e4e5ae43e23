"""Tabular dataset loading, splitting, and min-max normalization.

Datasets are UCI-style numeric CSV files with one integer label column.
Labels are remapped to contiguous ids at load time so probability
arrays stay dense.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "Dataset",
    "SplitSpec",
    "FeatureScaler",
    "load_csv",
    "split",
    "minmax_normalize",
]


@dataclass(frozen=True)
class Dataset:
    name: str
    features: np.ndarray  # (n_samples, n_features) float64
    labels: np.ndarray  # (n_samples,) int, values in [0, n_labels)
    n_features: int
    n_labels: int
    metadata: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.features.ndim != 2:
            raise ValueError("features must be a 2-D array")
        if self.features.shape[0] < 1:
            raise ValueError("dataset must contain at least one sample")
        if self.features.shape != (len(self.labels), self.n_features):
            raise ValueError("features/labels shape mismatch")
        if len(self.labels) and (self.labels.min() < 0 or self.labels.max() >= self.n_labels):
            raise ValueError("labels must lie in [0, n_labels)")

    @property
    def n_samples(self) -> int:
        return self.features.shape[0]


@dataclass(frozen=True)
class SplitSpec:
    train_fraction: float = 0.6
    validation_fraction: float = 0.3
    test_fraction: float = 0.1
    seed: int = 0

    def __post_init__(self) -> None:
        total = self.train_fraction + self.validation_fraction + self.test_fraction
        if abs(total - 1.0) > 1e-9:
            raise ValueError(f"split fractions must sum to 1.0, got {total}")
        for frac in (self.train_fraction, self.validation_fraction, self.test_fraction):
            if not 0.0 < frac < 1.0:
                raise ValueError("each split fraction must lie in (0, 1)")


def load_csv(path, label_column: int = -1, has_header: bool = False, name: str | None = None) -> Dataset:
    """Load a numeric CSV with a single integer label column.

    Raw label values are remapped to contiguous ids ``[0, n_labels)`` in
    sorted order; the mapping is recorded in ``metadata['label_mapping']``.
    """
    try:
        raw = np.loadtxt(path, delimiter=",", skiprows=1 if has_header else 0, ndmin=2)
    except OSError:
        raise
    except ValueError as exc:
        raise ValueError(f"failed to parse {path} as numeric CSV: {exc}") from exc
    if raw.size == 0:
        raise ValueError(f"{path} contains no data rows")

    n_cols = raw.shape[1]
    label_column = label_column % n_cols
    raw_labels = raw[:, label_column]
    if not np.allclose(raw_labels, np.round(raw_labels)):
        raise ValueError(f"label column {label_column} contains non-integer values")
    raw_labels = np.round(raw_labels).astype(int)

    features = np.delete(raw, label_column, axis=1)
    uniques = np.unique(raw_labels)
    mapping = {int(orig): i for i, orig in enumerate(uniques)}
    labels = np.searchsorted(uniques, raw_labels)
    if len(uniques) < 2:
        warnings.warn(f"{path}: dataset has a single class", stacklevel=2)

    return Dataset(
        name=name or str(path),
        features=np.ascontiguousarray(features, dtype=np.float64),
        labels=labels,
        n_features=features.shape[1],
        n_labels=len(uniques),
        metadata={"label_mapping": mapping, "source": str(path)},
    )


def _subset(ds: Dataset, idx: np.ndarray, suffix: str) -> Dataset:
    return Dataset(
        name=f"{ds.name}[{suffix}]",
        features=ds.features[idx],
        labels=ds.labels[idx],
        n_features=ds.n_features,
        n_labels=ds.n_labels,
        metadata=dict(ds.metadata),
    )


def split(ds: Dataset, spec: SplitSpec) -> tuple[Dataset, Dataset, Dataset]:
    """Deterministic shuffled split into train/validation/test.

    Validation and test sizes are floor allocations; the remainder goes
    to train. Raises if any partition would be empty.
    """
    n = ds.n_samples
    n_val = int(n * spec.validation_fraction)
    n_test = int(n * spec.test_fraction)
    n_train = n - n_val - n_test
    if min(n_train, n_val, n_test) < 1:
        raise ValueError(
            f"split of {n} samples at ({spec.train_fraction}, "
            f"{spec.validation_fraction}, {spec.test_fraction}) leaves an empty partition"
        )
    perm = np.random.default_rng(spec.seed).permutation(n)
    train_idx = perm[:n_train]
    val_idx = perm[n_train : n_train + n_val]
    test_idx = perm[n_train + n_val :]
    return (
        _subset(ds, train_idx, "train"),
        _subset(ds, val_idx, "validation"),
        _subset(ds, test_idx, "test"),
    )


class FeatureScaler:
    """Per-column affine map to [0, 1], fitted on training data.

    Constant columns map to 0. Transformed values are clipped to [0, 1]
    so out-of-range validation/test values stay inside the byte-bounded
    payload range.
    """

    def __init__(self) -> None:
        self.min_: np.ndarray | None = None
        self.scale_: np.ndarray | None = None

    def fit(self, X: np.ndarray) -> "FeatureScaler":
        X = np.asarray(X, dtype=np.float64)
        self.min_ = X.min(axis=0)
        span = X.max(axis=0) - self.min_
        span[span == 0.0] = 1.0  # constant column -> maps to 0
        self.scale_ = 1.0 / span
        return self

    def transform(self, X: np.ndarray) -> np.ndarray:
        if self.min_ is None:
            raise RuntimeError("scaler is not fitted")
        out = (np.asarray(X, dtype=np.float64) - self.min_) * self.scale_
        return np.clip(out, 0.0, 1.0)

    def fit_transform(self, X: np.ndarray) -> np.ndarray:
        return self.fit(X).transform(X)


def minmax_normalize(ds: Dataset, scaler: FeatureScaler | None = None) -> tuple[Dataset, FeatureScaler]:
    """Normalize features to [0, 1]; pass a fitted scaler to reuse train statistics."""
    if scaler is None:
        scaler = FeatureScaler().fit(ds.features)
    normalized = Dataset(
        name=ds.name,
        features=scaler.transform(ds.features),
        labels=ds.labels,
        n_features=ds.n_features,
        n_labels=ds.n_labels,
        metadata={**ds.metadata, "normalized": True},
    )
    return normalized, scaler

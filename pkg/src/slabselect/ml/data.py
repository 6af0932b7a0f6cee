"""Feature matrices, label encoding and z-score scaling."""
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from slabselect import CLASSES, FEATURES


def encode_labels(labels: Sequence[str]) -> np.ndarray:
    lookup = {name: i for i, name in enumerate(CLASSES)}
    try:
        return np.array([lookup[lab] for lab in labels], dtype=np.intp)
    except KeyError as exc:
        raise ValueError(f"unknown class label {exc.args[0]!r}; expected one of {CLASSES}") from None


def decode_labels(codes) -> list:
    return [CLASSES[int(c)] for c in codes]


@dataclass(frozen=True, eq=False)
class Scaling:
    """Per-column mean and population standard deviation (constant columns get 1)."""

    mean: np.ndarray
    scale: np.ndarray

    @classmethod
    def fit(cls, X) -> "Scaling":
        X = np.asarray(X, dtype=float)
        mean = X.mean(axis=0)
        sd = X.std(axis=0)
        sd = np.where(sd > 0, sd, 1.0)
        return cls(mean, sd)

    def apply(self, X) -> np.ndarray:
        return (np.asarray(X, dtype=float) - self.mean) / self.scale

    def to_dict(self):
        return {"mean": self.mean.tolist(), "scale": self.scale.tolist()}

    @classmethod
    def from_dict(cls, d):
        return cls(np.array(d["mean"], dtype=float), np.array(d["scale"], dtype=float))


@dataclass
class LabeledDataset:
    """n x 3 features (sn_order, num_cells, scattering_ratio) with class codes into CLASSES."""

    features: np.ndarray
    labels: np.ndarray
    scaling: Optional[Scaling] = None

    def __post_init__(self):
        self.features = np.ascontiguousarray(self.features, dtype=float)
        self.labels = np.asarray(self.labels, dtype=np.intp)
        if self.features.ndim != 2 or self.features.shape[0] < 1:
            raise ValueError("features must be a non-empty 2-D matrix")
        if self.labels.shape != (self.features.shape[0],):
            raise ValueError("labels must have one entry per feature row")
        if self.labels.min() < 0 or self.labels.max() >= len(CLASSES):
            raise ValueError(f"label codes must index {CLASSES}")

    def __len__(self):
        return self.labels.shape[0]

    @classmethod
    def from_records(cls, records, criterion: str) -> "LabeledDataset":
        rows = [r for r in records if r.label(criterion) is not None]
        if not rows:
            raise ValueError(f"no records carry a {criterion!r} label")
        X = np.array([r.features for r in rows], dtype=float)
        y = encode_labels([r.label(criterion) for r in rows])
        return cls(X, y)

    def subset(self, index) -> "LabeledDataset":
        return LabeledDataset(self.features[index], self.labels[index], self.scaling)


def standardize(dataset: LabeledDataset) -> LabeledDataset:
    """Z-score every column and keep the scaling for reuse at prediction time."""
    scaling = Scaling.fit(dataset.features)
    return LabeledDataset(scaling.apply(dataset.features), dataset.labels, scaling)


def feature_names():
    return list(FEATURES)

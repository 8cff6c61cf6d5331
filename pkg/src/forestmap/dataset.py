"""Tabular datasets: CSV loading, min-max scaling and stratified folds."""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np


class DatasetError(ValueError):
    """Raised for malformed input files or invalid dataset contents."""


@dataclass(frozen=True)
class Dataset:
    """``N x M`` real attributes plus a dense class index per sample."""

    attributes: np.ndarray
    labels: np.ndarray
    attribute_names: tuple[str, ...]
    class_count: int
    class_names: tuple[str, ...] = field(default=())

    def __post_init__(self):
        X = np.ascontiguousarray(self.attributes, dtype=np.float64)
        y = np.ascontiguousarray(self.labels, dtype=np.int64)
        if X.ndim != 2 or X.shape[0] < 1 or X.shape[1] < 1:
            raise DatasetError(f"attributes must be a non-empty 2-D array, got shape {X.shape}")
        if y.shape != (X.shape[0],):
            raise DatasetError(f"{y.shape[0]} labels for {X.shape[0]} samples")
        if not np.all(np.isfinite(X)):
            raise DatasetError("attributes contain missing or non-finite values")
        if self.class_count < 2:
            raise DatasetError(f"need at least 2 classes, got {self.class_count}")
        if y.min() < 0 or y.max() >= self.class_count:
            raise DatasetError("labels must lie in [0, class_count)")
        if np.unique(y).size != self.class_count:
            raise DatasetError("every class in [0, class_count) must occur at least once")
        if len(self.attribute_names) != X.shape[1]:
            raise DatasetError("attribute_names length does not match attribute count")
        X.setflags(write=False)
        y.setflags(write=False)
        object.__setattr__(self, "attributes", X)
        object.__setattr__(self, "labels", y)
        object.__setattr__(self, "attribute_names", tuple(self.attribute_names))
        names = tuple(self.class_names) or tuple(str(c) for c in range(self.class_count))
        object.__setattr__(self, "class_names", names)

    @property
    def n_samples(self) -> int:
        return self.attributes.shape[0]

    @property
    def n_attributes(self) -> int:
        return self.attributes.shape[1]

    def subset(self, index) -> "Dataset":
        """Rows selected by ``index``; keeps the full class universe.

        A subset may miss a class entirely (small folds), so the class
        invariant is relaxed by building the object without validation.
        """
        sub = object.__new__(Dataset)
        X = self.attributes[index]
        y = self.labels[index]
        X.setflags(write=False)
        y.setflags(write=False)
        for name, value in (("attributes", X), ("labels", y),
                            ("attribute_names", self.attribute_names),
                            ("class_count", self.class_count),
                            ("class_names", self.class_names)):
            object.__setattr__(sub, name, value)
        return sub

    def with_attributes(self, X) -> "Dataset":
        sub = self.subset(slice(None))
        X = np.ascontiguousarray(X, dtype=np.float64)
        X.setflags(write=False)
        object.__setattr__(sub, "attributes", X)
        return sub

    def to_dict(self) -> dict:
        return {
            "attribute_names": list(self.attribute_names),
            "class_names": list(self.class_names),
            "class_count": self.class_count,
            "attributes": self.attributes.tolist(),
            "labels": self.labels.tolist(),
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "Dataset":
        return cls(np.asarray(doc["attributes"], dtype=float),
                   np.asarray(doc["labels"], dtype=int),
                   tuple(doc["attribute_names"]), int(doc["class_count"]),
                   tuple(doc.get("class_names", ())))


def load_csv(path, label_column: int | str = -1, has_header: bool = True) -> Dataset:
    """Read a comma-separated file into a :class:`Dataset`.

    Parameters
    ----------
    path : str or Path
        File to read.
    label_column : int or str
        Column holding the class, by position (negative counts from the end)
        or by header name. Defaults to the last column.
    has_header : bool
        Whether the first line holds column names.

    Class values are mapped to ``0..C-1`` in order of first appearance,
    whether they look numeric or not.
    """
    path = Path(path)
    with open(path, newline="") as fh:
        rows = [r for r in csv.reader(fh) if r and any(v.strip() for v in r)]
    if has_header:
        if not rows:
            raise DatasetError(f"{path}: empty file")
        header = [h.strip() for h in rows[0]]
        body = rows[1:]
        first_line = 2
    else:
        header = None
        body = rows
        first_line = 1
    if not body:
        raise DatasetError(f"{path}: no data rows")

    width = len(header) if header is not None else len(body[0])
    if isinstance(label_column, str):
        if header is None or label_column not in header:
            raise DatasetError(f"{path}: no column named {label_column!r}")
        label_idx = header.index(label_column)
    else:
        label_idx = label_column if label_column >= 0 else width + label_column
        if not 0 <= label_idx < width:
            raise DatasetError(f"{path}: label column {label_column} out of range for {width} columns")
    if width < 2:
        raise DatasetError(f"{path}: need at least one attribute column and a label column")

    values = np.empty((len(body), width - 1))
    codes: dict[str, int] = {}
    labels = np.empty(len(body), dtype=np.int64)
    for r, row in enumerate(body):
        line = first_line + r
        if len(row) != width:
            raise DatasetError(f"{path}: row {line} has {len(row)} fields, expected {width}")
        raw_label = row[label_idx].strip()
        if raw_label == "":
            raise DatasetError(f"{path}: row {line} has an empty label")
        labels[r] = codes.setdefault(raw_label, len(codes))
        fields = row[:label_idx] + row[label_idx + 1:]
        for j, v in enumerate(fields):
            try:
                values[r, j] = float(v)
            except ValueError:
                raise DatasetError(f"{path}: row {line}, column {j + (j >= label_idx)}: "
                                   f"non-numeric value {v!r}") from None
            if not np.isfinite(values[r, j]):
                raise DatasetError(f"{path}: row {line}: missing or non-finite value {v!r}")

    if len(codes) < 2:
        raise DatasetError(f"{path}: need at least 2 classes, found {len(codes)}")
    if header is not None:
        names = tuple(header[:label_idx] + header[label_idx + 1:])
    else:
        names = tuple(f"attr_{j}" for j in range(width - 1))
    return Dataset(values, labels, names, len(codes), tuple(codes))


@dataclass(frozen=True)
class NormalizationParams:
    minimum: np.ndarray
    maximum: np.ndarray
    method: str = "min-max"

    def __post_init__(self):
        if self.method not in ("none", "min-max"):
            raise ValueError(f"unknown normalization method {self.method!r}")
        lo = np.asarray(self.minimum, dtype=float)
        hi = np.asarray(self.maximum, dtype=float)
        if lo.shape != hi.shape or lo.ndim != 1:
            raise ValueError("minimum and maximum must be 1-D arrays of equal length")
        if np.any(hi < lo):
            raise ValueError("maximum below minimum")
        object.__setattr__(self, "minimum", lo)
        object.__setattr__(self, "maximum", hi)

    @classmethod
    def identity(cls, n_attributes: int) -> "NormalizationParams":
        return cls(np.zeros(n_attributes), np.ones(n_attributes), "none")

    def transform(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        if X.shape[-1] != self.minimum.size:
            raise DatasetError(f"expected {self.minimum.size} attributes, got {X.shape[-1]}")
        if self.method == "none":
            return X.copy()
        span = self.maximum - self.minimum
        constant = span == 0
        out = (X - self.minimum) / np.where(constant, 1.0, span)
        out[..., constant] = 0.0
        return out

    def inverse(self, X) -> np.ndarray:
        """Undo :meth:`transform`; constant attributes come back as their minimum."""
        X = np.asarray(X, dtype=float)
        if self.method == "none":
            return X.copy()
        return X * (self.maximum - self.minimum) + self.minimum

    def to_dict(self) -> dict:
        return {"method": self.method, "minimum": self.minimum.tolist(),
                "maximum": self.maximum.tolist()}

    @classmethod
    def from_dict(cls, doc: dict) -> "NormalizationParams":
        return cls(np.asarray(doc["minimum"], dtype=float),
                   np.asarray(doc["maximum"], dtype=float), doc.get("method", "min-max"))


def fit_minmax(data: Dataset) -> NormalizationParams:
    X = data.attributes
    return NormalizationParams(X.min(axis=0), X.max(axis=0), "min-max")


def apply_normalization(data: Dataset, params: NormalizationParams) -> Dataset:
    """Map attributes to ``(x - min) / (max - min)``; constant ones go to 0.

    Values outside the fitted range (held-out folds) are not clipped.
    """
    return data.with_attributes(params.transform(data.attributes))


@dataclass(frozen=True)
class FoldSplit:
    fold_count: int
    assignment: np.ndarray

    def train_test(self, fold: int) -> tuple[np.ndarray, np.ndarray]:
        """Sample indices for training on all folds but ``fold``."""
        test = np.flatnonzero(self.assignment == fold)
        train = np.flatnonzero(self.assignment != fold)
        return train, test


def stratified_folds(data: Dataset, k: int, seed: int) -> FoldSplit:
    """Assign samples to ``k`` folds, class by class.

    Each class's indices are shuffled and dealt round-robin. The dealing
    continues across classes, so the fold sizes stay balanced too.
    """
    if k < 2:
        raise DatasetError(f"need k >= 2 folds, got {k}")
    if k > data.n_samples:
        raise DatasetError(f"{k} folds requested for {data.n_samples} samples")
    rng = np.random.default_rng(seed)
    assignment = np.empty(data.n_samples, dtype=np.int64)
    offset = 0
    for c in range(data.class_count):
        members = rng.permutation(np.flatnonzero(data.labels == c))
        assignment[members] = (offset + np.arange(members.size)) % k
        offset += members.size
    assignment.setflags(write=False)
    return FoldSplit(k, assignment)


def save_json(obj, path) -> None:
    Path(path).write_text(json.dumps(obj.to_dict(), indent=1) + "\n")

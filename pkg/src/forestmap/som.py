"""Rectangular Self-Organising Map with exponential learning schedules.

Neuron ``(p, q)`` of a ``P x Q`` grid is stored in row ``p * Q + q`` of the
weight matrix. Training presents samples one at a time; the learning rate
decays and the neighbourhood narrows from epoch to epoch.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import _kernels
from .dataset import Dataset

BmuFinder = Callable[["SomGrid", np.ndarray], int]


@dataclass(frozen=True)
class SomHyperParams:
    e_stop: int = 200
    eta0: float = 0.1
    lambda_eta: float = 0.0345
    alpha0: float = 0.1
    lambda_alpha: float = 0.008

    def __post_init__(self):
        if self.e_stop < 0:
            raise ValueError("e_stop must be non-negative")
        for name in ("eta0", "lambda_eta", "alpha0", "lambda_alpha"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be strictly positive")

    def to_dict(self) -> dict:
        return {k: getattr(self, k) for k in ("e_stop", "eta0", "lambda_eta",
                                              "alpha0", "lambda_alpha")}


@dataclass
class SomGrid:
    rows: int
    cols: int
    weights: np.ndarray

    def __post_init__(self):
        if self.rows < 1 or self.cols < 1:
            raise ValueError("grid needs at least one row and one column")
        self.weights = np.ascontiguousarray(self.weights, dtype=np.float64)
        if self.weights.ndim != 2 or self.weights.shape[0] != self.rows * self.cols:
            raise ValueError(f"weights shape {self.weights.shape} does not fit a "
                             f"{self.rows}x{self.cols} grid")

    @property
    def size(self) -> int:
        return self.rows * self.cols

    @property
    def dim(self) -> int:
        return self.weights.shape[1]

    def coords(self, index: int) -> tuple[int, int]:
        return divmod(int(index), self.cols)

    def index(self, p: int, q: int) -> int:
        return p * self.cols + q

    def grid_sq_distances(self) -> np.ndarray:
        """``L x L`` matrix of squared lattice distances between neurons."""
        p, q = np.divmod(np.arange(self.size), self.cols)
        return (p[:, None] - p) ** 2 + (q[:, None] - q) ** 2.0

    def copy(self) -> "SomGrid":
        return SomGrid(self.rows, self.cols, self.weights.copy())

    def to_dict(self) -> dict:
        return {"rows": self.rows, "cols": self.cols, "weights": self.weights.tolist()}

    @classmethod
    def from_dict(cls, doc: dict) -> "SomGrid":
        return cls(int(doc["rows"]), int(doc["cols"]), np.asarray(doc["weights"], dtype=float))


def init_grid(rows: int, cols: int, data: Dataset, seed: int) -> SomGrid:
    """Weights drawn uniformly within each attribute's range over ``data``."""
    X = data.attributes
    lo, hi = X.min(axis=0), X.max(axis=0)
    rng = np.random.default_rng(seed)
    return SomGrid(rows, cols, lo + rng.random((rows * cols, X.shape[1])) * (hi - lo))


def squared_euclidean(x, w) -> float:
    x = np.asarray(x, dtype=float)
    w = np.asarray(w, dtype=float)
    if x.shape != w.shape:
        raise ValueError(f"dimension mismatch: {x.shape} vs {w.shape}")
    d = x - w
    return float(d @ d)


def learning_rate(params: SomHyperParams, epoch: int) -> float:
    return params.eta0 * math.exp(-epoch * params.lambda_eta)


def neighbourhood_width(params: SomHyperParams, epoch: int) -> float:
    """Grows towards ``alpha0`` at ``e_stop``; larger means a narrower kernel."""
    return params.alpha0 * math.exp(-(params.e_stop - epoch) * params.lambda_alpha)


def neighbourhood(alpha: float, bmu: tuple[int, int], neuron: tuple[int, int]) -> float:
    (r, v), (p, q) = bmu, neuron
    return math.exp(-alpha * ((r - p) ** 2 + (v - q) ** 2))


def find_bmu_euclidean(grid: SomGrid, x) -> int:
    x = np.asarray(x, dtype=float)
    if x.shape != (grid.dim,):
        raise ValueError(f"expected {grid.dim} attributes, got {x.shape}")
    return int(_kernels._euclidean_bmu(grid.weights, x))


def update_weights(grid: SomGrid, x, bmu: int, eta: float, alpha: float) -> None:
    """Pull every neuron towards ``x`` by ``eta * h``; mutates ``grid``."""
    x = np.asarray(x, dtype=float)
    if x.shape != (grid.dim,):
        raise ValueError(f"expected {grid.dim} attributes, got {x.shape}")
    h = np.exp(-alpha * grid.grid_sq_distances()[bmu])
    grid.weights += eta * h[:, None] * (x - grid.weights)


def train_som(grid: SomGrid, data: Dataset, params: SomHyperParams, seed: int) -> SomGrid:
    """Euclidean SOM training; returns a new grid and leaves ``grid`` untouched.

    Sample order is reshuffled every epoch from ``seed``.
    """
    _check_dims(grid, data)
    out = grid.copy()
    d2 = out.grid_sq_distances()
    rng = np.random.default_rng(seed)
    for e in range(params.e_stop):
        order = rng.permutation(data.n_samples)
        _kernels.som_epoch_euclidean(out.weights, data.attributes, order,
                                     learning_rate(params, e),
                                     neighbourhood_width(params, e), d2)
    return out


def _check_dims(grid: SomGrid, data: Dataset) -> None:
    if grid.dim != data.n_attributes:
        raise ValueError(f"grid weights have {grid.dim} attributes, data has {data.n_attributes}")


@dataclass(frozen=True)
class LabeledSom:
    grid: SomGrid
    neuron_labels: np.ndarray
    class_mass: np.ndarray
    params: SomHyperParams = field(default_factory=SomHyperParams)
    alpha_label: float = 0.1

    def to_dict(self) -> dict:
        return {"grid": self.grid.to_dict(), "neuron_labels": self.neuron_labels.tolist(),
                "class_mass": self.class_mass.tolist(), "params": self.params.to_dict(),
                "alpha_label": self.alpha_label}

    @classmethod
    def from_dict(cls, doc: dict) -> "LabeledSom":
        return cls(SomGrid.from_dict(doc["grid"]), np.asarray(doc["neuron_labels"], dtype=np.int64),
                   np.asarray(doc["class_mass"], dtype=float), SomHyperParams(**doc["params"]),
                   float(doc["alpha_label"]))


def label_som(grid: SomGrid, data: Dataset, bmu_finder: BmuFinder = find_bmu_euclidean,
              alpha_label: float | None = None,
              params: SomHyperParams | None = None) -> LabeledSom:
    """Give each neuron the class with the largest summed neighbourhood value.

    Every sample adds ``h`` (relative to its own BMU) to the mass of its class
    at every neuron. ``alpha_label`` defaults to ``params.alpha0``, the width
    in force at the end of training.
    """
    if data.n_samples == 0:
        raise ValueError("cannot label a map without samples")
    params = params or SomHyperParams()
    alpha = params.alpha0 if alpha_label is None else float(alpha_label)
    d2 = grid.grid_sq_distances()
    mass = np.zeros((grid.size, data.class_count))
    for x, c in zip(data.attributes, data.labels):
        mass[:, c] += np.exp(-alpha * d2[bmu_finder(grid, x)])
    return LabeledSom(grid, mass.argmax(axis=1), mass, params, alpha)


def classify(labeled: LabeledSom, x, bmu_finder: BmuFinder = find_bmu_euclidean) -> int:
    return int(labeled.neuron_labels[bmu_finder(labeled.grid, np.asarray(x, dtype=float))])


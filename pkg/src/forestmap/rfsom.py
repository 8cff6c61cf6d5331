"""SOM training and classification with a Random Forest as the distance.

The best matching unit for a sample is the neuron that shares a leaf with it
in the most trees, i.e. the one with the lowest RF dissimilarity. Weight
updates stay in attribute space, exactly as in the Euclidean SOM.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from functools import partial
from pathlib import Path

import numpy as np

from . import _kernels
from .dataset import Dataset, NormalizationParams, apply_normalization, fit_minmax
from .forest import RandomForest, train_forest
from .som import (LabeledSom, SomGrid, SomHyperParams, _check_dims, init_grid,
                  label_som, learning_rate, neighbourhood_width)

MODEL_FORMAT = "forestmap.rfsom"
MODEL_VERSION = 1


def find_bmu_rf(forest: RandomForest, grid: SomGrid, x) -> int:
    """Neuron with the smallest RF dissimilarity to ``x``; lowest index on ties.

    Routes ``x`` and each of the L neurons through every tree once, so only
    the sample's row of the ``(L+1) x (L+1)`` dissimilarity matrix is formed.
    """
    x = np.ascontiguousarray(x, dtype=np.float64)
    if x.shape != (grid.dim,) or grid.dim != forest.attribute_count:
        raise ValueError(f"dimension mismatch: sample {x.shape}, grid {grid.dim}, "
                         f"forest {forest.attribute_count}")
    forest.traversals += (grid.size + 1) * forest.tree_count
    return int(_kernels.rf_bmu(grid.weights, x, *forest.flat))


def train_rfsom(grid: SomGrid, forest: RandomForest, data: Dataset,
                params: SomHyperParams, seed: int) -> SomGrid:
    """Same loop as :func:`forestmap.som.train_som` with the RF-based BMU.

    The same ``seed`` gives the same presentation order as the Euclidean run.
    """
    _check_dims(grid, data)
    if forest.attribute_count != grid.dim:
        raise ValueError("forest and grid disagree on the attribute count")
    out = grid.copy()
    d2 = out.grid_sq_distances()
    rng = np.random.default_rng(seed)
    for e in range(params.e_stop):
        order = rng.permutation(data.n_samples)
        forest.traversals += _kernels.som_epoch_rf(
            out.weights, data.attributes, order, learning_rate(params, e),
            neighbourhood_width(params, e), d2, *forest.flat)
    return out


@dataclass(frozen=True)
class RfSomModel:
    forest: RandomForest
    labeled: LabeledSom
    normalization: NormalizationParams

    def bmu(self, x) -> int:
        return find_bmu_rf(self.forest, self.labeled.grid, self.normalization.transform(x))

    def classify(self, x) -> int:
        """Class of the RF-nearest neuron for a raw (unnormalized) sample."""
        return int(self.labeled.neuron_labels[self.bmu(x)])

    def predict(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if X.shape[1] != self.forest.attribute_count:
            raise ValueError(f"model expects {self.forest.attribute_count} attributes, "
                             f"got {X.shape[1]}")
        return np.array([self.classify(x) for x in X], dtype=np.int64)

    def to_dict(self) -> dict:
        return {"format": MODEL_FORMAT, "version": MODEL_VERSION,
                "forest": self.forest.to_dict(), "som": self.labeled.to_dict(),
                "normalization": self.normalization.to_dict()}

    @classmethod
    def from_dict(cls, doc: dict) -> "RfSomModel":
        if doc.get("format") != MODEL_FORMAT or doc.get("version") != MODEL_VERSION:
            raise ValueError(f"not a {MODEL_FORMAT} v{MODEL_VERSION} document: "
                             f"format={doc.get('format')!r} version={doc.get('version')!r}")
        return cls(RandomForest.from_dict(doc["forest"]), LabeledSom.from_dict(doc["som"]),
                   NormalizationParams.from_dict(doc["normalization"]))

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict()) + "\n")

    @classmethod
    def load(cls, path) -> "RfSomModel":
        return cls.from_dict(json.loads(Path(path).read_text()))


def build_rfsom_classifier(data: Dataset, grid_shape: tuple[int, int],
                           tree_count: int = 100, m: int | None = None,
                           som_params: SomHyperParams | None = None,
                           forest_seed: int = 0, init_seed: int = 1,
                           shuffle_seed: int = 2, normalize: bool = True) -> RfSomModel:
    """Fit normalization, forest and RF-SOM on ``data`` and label the map."""
    som_params = som_params or SomHyperParams()
    norm = fit_minmax(data) if normalize else NormalizationParams.identity(data.n_attributes)
    train = apply_normalization(data, norm)
    forest = train_forest(train, tree_count, m, forest_seed)
    grid = init_grid(*grid_shape, train, init_seed)
    trained = train_rfsom(grid, forest, train, som_params, shuffle_seed)
    labeled = label_som(trained, train, partial(find_bmu_rf, forest), params=som_params)
    return RfSomModel(forest, labeled, norm)


def rf_bmu_finder(forest: RandomForest):
    """BMU strategy for :func:`forestmap.som.label_som` and ``classify``."""
    return partial(find_bmu_rf, forest)

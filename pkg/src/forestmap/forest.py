"""Random Forest classification and leaf-sharing proximities.

Trees are grown to purity on bootstrap samples, choosing each split by
information gain over a random subset of attributes. Two samples are close
when many trees route them to the same leaf.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Union

import numpy as np

from . import _kernels
from .dataset import Dataset

FOREST_FORMAT = "forestmap.forest"
FOREST_VERSION = 1

# gains at or below this are rounding noise of a zero-gain split
_MIN_GAIN = 1e-12


@dataclass(frozen=True)
class Internal:
    attribute_index: int
    threshold: float
    left: "TreeNode"
    right: "TreeNode"


@dataclass(frozen=True)
class Leaf:
    class_label: int
    leaf_id: int


TreeNode = Union[Internal, Leaf]


@dataclass(frozen=True, eq=False)
class DecisionTree:
    """One fully grown tree stored as parallel node arrays (preorder).

    ``feature[k] == -1`` marks a leaf; ``left``/``right`` are node positions
    within this tree.
    """

    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    leaf_id: np.ndarray
    leaf_class: np.ndarray

    _FIELDS = ("feature", "threshold", "left", "right", "leaf_id", "leaf_class")

    def __eq__(self, other):
        if not isinstance(other, DecisionTree):
            return NotImplemented
        return all(np.array_equal(getattr(self, k), getattr(other, k)) for k in self._FIELDS)

    __hash__ = None

    @property
    def node_count(self) -> int:
        return self.feature.size

    @property
    def leaf_count(self) -> int:
        return int(np.count_nonzero(self.feature < 0))

    @property
    def depth(self) -> int:
        depth = np.zeros(self.node_count, dtype=int)
        for k in range(self.node_count):
            if self.feature[k] >= 0:
                depth[self.left[k]] = depth[self.right[k]] = depth[k] + 1
        return int(depth.max())

    @property
    def root(self) -> TreeNode:
        return self._node(0)

    def _node(self, k: int) -> TreeNode:
        if self.feature[k] < 0:
            return Leaf(int(self.leaf_class[k]), int(self.leaf_id[k]))
        return Internal(int(self.feature[k]), float(self.threshold[k]),
                        self._node(int(self.left[k])), self._node(int(self.right[k])))

    @classmethod
    def from_root(cls, root: TreeNode) -> "DecisionTree":
        cols = {"feature": [], "threshold": [], "left": [], "right": [],
                "leaf_id": [], "leaf_class": []}

        def visit(node):
            k = len(cols["feature"])
            for v in cols.values():
                v.append(-1)
            cols["threshold"][k] = 0.0
            if isinstance(node, Leaf):
                cols["leaf_id"][k] = node.leaf_id
                cols["leaf_class"][k] = node.class_label
            else:
                cols["feature"][k] = node.attribute_index
                cols["threshold"][k] = node.threshold
                cols["left"][k] = visit(node.left)
                cols["right"][k] = visit(node.right)
            return k

        visit(root)
        return cls(**{k: np.asarray(v, dtype=float if k == "threshold" else np.int64)
                      for k, v in cols.items()})


def information_gain(parent_labels, left_labels, right_labels) -> float:
    """Entropy (base 2) of the parent minus the size-weighted child entropies."""
    parent = np.asarray(parent_labels)
    if parent.size == 0:
        raise ValueError("information gain of an empty node")
    left = np.asarray(left_labels)
    right = np.asarray(right_labels)
    n = parent.size
    return (_entropy(parent) - left.size / n * _entropy(left)
            - right.size / n * _entropy(right))


def _entropy(labels) -> float:
    if labels.size == 0:
        return 0.0
    _, counts = np.unique(labels, return_counts=True)
    p = counts / labels.size
    return float(-np.sum(p * np.log2(p)))


def grow_tree(X: np.ndarray, y: np.ndarray, n_classes: int, m: int,
              rng: np.random.Generator) -> DecisionTree:
    """Grow one unpruned tree on all rows of ``X``.

    A node becomes a leaf when it is pure, holds fewer than 2 samples, or
    none of its ``m`` sampled attributes yields a positive gain.
    """
    M = X.shape[1]
    feature, threshold, left, right, leaf_id, leaf_class = [], [], [], [], [], []
    n_leaves = 0
    stack = [(np.arange(X.shape[0]), -1, 0)]
    while stack:
        idx, parent, side = stack.pop()
        k = len(feature)
        if parent >= 0:
            (left if side == 0 else right)[parent] = k
        counts = np.bincount(y[idx], minlength=n_classes)
        split_f = -1
        if idx.size >= 2 and np.count_nonzero(counts) > 1:
            feats = np.sort(rng.choice(M, size=m, replace=False))
            split_f, split_thr, gain = _kernels.best_split(X, y, idx, feats, n_classes)
            if gain <= _MIN_GAIN:
                split_f = -1
        if split_f < 0:
            feature.append(-1)
            threshold.append(0.0)
            left.append(-1)
            right.append(-1)
            leaf_id.append(n_leaves)
            leaf_class.append(int(np.argmax(counts)))
            n_leaves += 1
            continue
        feature.append(int(split_f))
        threshold.append(float(split_thr))
        left.append(-1)
        right.append(-1)
        leaf_id.append(-1)
        leaf_class.append(-1)
        goes_left = X[idx, split_f] <= split_thr
        stack.append((idx[~goes_left], k, 1))
        stack.append((idx[goes_left], k, 0))
    as_int = lambda v: np.asarray(v, dtype=np.int64)
    return DecisionTree(as_int(feature), np.asarray(threshold, dtype=float),
                        as_int(left), as_int(right), as_int(leaf_id), as_int(leaf_class))


@dataclass
class RandomForest:
    """A trained forest. Trees never change after training.

    ``traversals`` counts root-to-leaf routings done on behalf of callers;
    it is instrumentation and takes no part in equality.
    """

    trees: list[DecisionTree]
    m: int
    class_count: int
    attribute_count: int
    seed: int | None = None
    traversals: int = field(default=0, compare=False, repr=False)

    def __post_init__(self):
        if not self.trees:
            raise ValueError("a forest needs at least one tree")
        if not 1 <= self.m <= self.attribute_count:
            raise ValueError(f"m={self.m} outside [1, {self.attribute_count}]")
        sizes = np.array([t.node_count for t in self.trees])
        offsets = np.concatenate([[0], np.cumsum(sizes)[:-1]])
        shift = lambda arr, off: np.where(arr >= 0, arr + off, -1)
        self._roots = offsets.astype(np.int64)
        self._feature = np.concatenate([t.feature for t in self.trees])
        self._threshold = np.concatenate([t.threshold for t in self.trees])
        self._left = np.concatenate([shift(t.left, o) for t, o in zip(self.trees, offsets)])
        self._right = np.concatenate([shift(t.right, o) for t, o in zip(self.trees, offsets)])
        self._leaf_id = np.concatenate([t.leaf_id for t in self.trees])
        self._leaf_class = np.concatenate([t.leaf_class for t in self.trees])

    @property
    def tree_count(self) -> int:
        return len(self.trees)

    @property
    def flat(self) -> tuple:
        """``(roots, feature, threshold, left, right)`` for the compiled routines."""
        return self._roots, self._feature, self._threshold, self._left, self._right

    def leaf_matrix(self, X) -> np.ndarray:
        """Leaf id reached by every row of ``X`` in every tree, shape ``(n, T)``."""
        X = self._check(X)
        self.traversals += X.shape[0] * self.tree_count
        return _kernels.leaf_matrix(X, *self.flat, self._leaf_id)

    def votes(self, X) -> np.ndarray:
        """Leaf class of every row in every tree, shape ``(n, T)``."""
        X = self._check(X)
        self.traversals += X.shape[0] * self.tree_count
        nodes = _kernels.leaf_matrix(X, *self.flat, np.arange(self._feature.size))
        return self._leaf_class[nodes]

    def predict(self, X) -> np.ndarray:
        votes = self.votes(X)
        tally = np.zeros((votes.shape[0], self.class_count), dtype=np.int64)
        for c in range(self.class_count):
            tally[:, c] = np.count_nonzero(votes == c, axis=1)
        return tally.argmax(axis=1)

    def _check(self, X) -> np.ndarray:
        X = np.ascontiguousarray(X, dtype=np.float64)
        if X.ndim != 2 or X.shape[1] != self.attribute_count:
            raise ValueError(f"expected rows of {self.attribute_count} attributes, "
                             f"got shape {X.shape}")
        return X

    def to_dict(self) -> dict:
        return {
            "format": FOREST_FORMAT,
            "version": FOREST_VERSION,
            "tree_count": self.tree_count,
            "m": self.m,
            "class_count": self.class_count,
            "attribute_count": self.attribute_count,
            "seed": self.seed,
            "trees": [_node_to_dict(t.root) for t in self.trees],
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "RandomForest":
        if doc.get("format") != FOREST_FORMAT or doc.get("version") != FOREST_VERSION:
            raise ValueError(f"not a {FOREST_FORMAT} v{FOREST_VERSION} document: "
                             f"format={doc.get('format')!r} version={doc.get('version')!r}")
        trees = [DecisionTree.from_root(_node_from_dict(t)) for t in doc["trees"]]
        return cls(trees, int(doc["m"]), int(doc["class_count"]),
                   int(doc["attribute_count"]), doc.get("seed"))


def _node_to_dict(node: TreeNode) -> dict:
    if isinstance(node, Leaf):
        return {"leaf_id": node.leaf_id, "class": node.class_label}
    return {"attribute": node.attribute_index, "threshold": node.threshold,
            "left": _node_to_dict(node.left), "right": _node_to_dict(node.right)}


def _node_from_dict(doc: dict) -> TreeNode:
    if "leaf_id" in doc:
        return Leaf(int(doc["class"]), int(doc["leaf_id"]))
    return Internal(int(doc["attribute"]), float(doc["threshold"]),
                    _node_from_dict(doc["left"]), _node_from_dict(doc["right"]))


def default_m(n_attributes: int) -> int:
    """``max(1, floor(sqrt(M)))``."""
    return max(1, math.isqrt(n_attributes))


def train_forest(data: Dataset, tree_count: int = 100, m: int | None = None,
                 seed: int = 0, bootstrap: bool = True,
                 sample_size: int | None = None, shared_stream: bool = False) -> RandomForest:
    """Train ``tree_count`` trees on bootstrap resamples of ``data``.

    Tree ``t`` draws from its own stream seeded by ``(seed, t)``, so the
    result does not depend on the order in which trees are built.

    Parameters
    ----------
    m : int, optional
        Attributes sampled per split; defaults to ``floor(sqrt(M))``.
    bootstrap : bool
        Disable to grow every tree on the full data in original order.
    sample_size : int, optional
        Bootstrap size; defaults to N.
    shared_stream : bool
        Seed every tree with ``(seed, 0)``, giving T identical trees. Test hook.
    """
    if tree_count < 1:
        raise ValueError("tree_count must be >= 1")
    M = data.n_attributes
    m = default_m(M) if m is None else int(m)
    if not 1 <= m <= M:
        raise ValueError(f"m={m} outside [1, {M}]")
    X, y = data.attributes, data.labels
    n = data.n_samples if sample_size is None else int(sample_size)
    trees = []
    for t in range(tree_count):
        rng = np.random.default_rng([seed, 0 if shared_stream else t])
        if bootstrap:
            rows = rng.integers(0, data.n_samples, size=n)
            Xb, yb = X[rows], y[rows]
        else:
            Xb, yb = X, y
        trees.append(grow_tree(Xb, yb, data.class_count, m, rng))
    return RandomForest(trees, m, data.class_count, M, seed)


def predict(forest: RandomForest, x) -> int:
    """Majority vote over trees; ties go to the lowest class index."""
    return int(forest.predict(np.atleast_2d(x))[0])


def leaf_ids(forest: RandomForest, x) -> np.ndarray:
    return forest.leaf_matrix(np.atleast_2d(x))[0]


@dataclass(frozen=True)
class ProximityMatrix:
    values: np.ndarray
    tree_count: int

    @property
    def size(self) -> int:
        return self.values.shape[0]

    def dissimilarity(self) -> np.ndarray:
        return 1.0 - self.values

    def to_csv(self, path) -> None:
        np.savetxt(path, self.values, delimiter=",", fmt="%.17g")


def proximity_matrix(forest: RandomForest, rows) -> ProximityMatrix:
    """Fraction of trees in which each pair of rows shares a leaf."""
    rows = np.asarray(rows, dtype=float)
    if rows.ndim != 2 or rows.shape[0] == 0:
        raise ValueError("proximity_matrix needs a non-empty list of rows")
    leaves = forest.leaf_matrix(rows)
    shared = _kernels.shared_leaf_counts(leaves, leaves)
    return ProximityMatrix(shared / forest.tree_count, forest.tree_count)


def dissimilarity_row(forest: RandomForest, query, references,
                      reference_leaf_cache: np.ndarray | None = None) -> np.ndarray:
    """``1 - proximity`` between one query and each reference row.

    Pass ``reference_leaf_cache`` (from :meth:`RandomForest.leaf_matrix`) to
    skip re-routing references that have not changed.
    """
    q_leaves = forest.leaf_matrix(np.atleast_2d(query))
    if reference_leaf_cache is None:
        reference_leaf_cache = forest.leaf_matrix(references)
    elif np.asarray(references).shape[0] != reference_leaf_cache.shape[0]:
        raise ValueError("reference_leaf_cache does not match references")
    shared = _kernels.shared_leaf_counts(q_leaves, np.asarray(reference_leaf_cache))
    return 1.0 - shared[0] / forest.tree_count


def save_forest(forest: RandomForest, path) -> None:
    Path(path).write_text(json.dumps(forest.to_dict()) + "\n")


def load_forest(path) -> RandomForest:
    return RandomForest.from_dict(json.loads(Path(path).read_text()))

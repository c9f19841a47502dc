"""Random-forest binary classifier built from scratch.

Each tree is grown on a bootstrap sample with a fresh feature subset per
split (gini impurity, midpoint thresholds). Every tree draws from its own
seeded substream, so training is reproducible regardless of how many
workers grow trees in parallel. Trees are stored as flat arrays and applied
vectorized.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from ..errors import DatasetError, TrainingError


@dataclass(frozen=True)
class RfHyper:
    n_trees: int = 100
    max_depth: int = 12
    min_leaf: int = 2
    feat_frac: float = math.sqrt(13.0) / 13.0

    def __post_init__(self):
        if self.n_trees < 1 or self.max_depth < 0 or self.min_leaf < 1:
            raise TrainingError("invalid forest hyperparameters")
        if not 0.0 < self.feat_frac <= 1.0:
            raise TrainingError("feat_frac must be in (0, 1]")


@dataclass(frozen=True)
class Tree:
    """Flat node arrays: feature < 0 marks a leaf, value holds its class."""

    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray

    def apply(self, x_matrix: np.ndarray) -> np.ndarray:
        node = np.zeros(x_matrix.shape[0], dtype=np.int64)
        active = self.feature[node] >= 0
        while np.any(active):
            idx = np.nonzero(active)[0]
            cur = node[idx]
            go_left = x_matrix[idx, self.feature[cur]] <= self.threshold[cur]
            node[idx] = np.where(go_left, self.left[cur], self.right[cur])
            active = self.feature[node] >= 0
        return self.value[node]


@dataclass(frozen=True)
class ForestModel:
    trees: tuple[Tree, ...]
    hyper: RfHyper
    seed: int
    n_features: int


class _TreeBuilder:
    def __init__(self, x, y, hyper, rng):
        self.x = x
        self.y = y
        self.hyper = hyper
        self.rng = rng
        self.n_split_features = max(1, math.ceil(hyper.feat_frac * x.shape[1]))
        self.feature = []
        self.threshold = []
        self.left = []
        self.right = []
        self.value = []

    def _new_node(self) -> int:
        for arr in (self.feature, self.threshold, self.left, self.right, self.value):
            arr.append(-1)
        return len(self.feature) - 1

    def _leaf(self, node: int, labels: np.ndarray) -> None:
        ones = int(labels.sum())
        zeros = labels.size - ones
        # tie -> class 0 (no handover)
        self.value[node] = 1 if ones > zeros else 0

    def build(self, indices: np.ndarray, depth: int = 0) -> int:
        node = self._new_node()
        labels = self.y[indices]
        if depth >= self.hyper.max_depth or indices.size < 2 * self.hyper.min_leaf \
                or labels.min() == labels.max():
            self._leaf(node, labels)
            return node
        split = self._best_split(indices)
        if split is None:
            self._leaf(node, labels)
            return node
        feat, thr = split
        mask = self.x[indices, feat] <= thr
        left_idx = indices[mask]
        right_idx = indices[~mask]
        self.feature[node] = feat
        self.threshold[node] = thr
        self.left[node] = self.build(left_idx, depth + 1)
        self.right[node] = self.build(right_idx, depth + 1)
        return node

    def _best_split(self, indices: np.ndarray):
        feats = self.rng.choice(self.x.shape[1], size=self.n_split_features,
                                replace=False)
        y = self.y[indices]
        n = indices.size
        total_ones = y.sum()
        best = None
        best_score = np.inf
        min_leaf = self.hyper.min_leaf
        for feat in feats:
            vals = self.x[indices, feat]
            order = np.argsort(vals, kind="stable")
            sv = vals[order]
            sy = y[order]
            ones_left = np.cumsum(sy)[:-1]
            n_left = np.arange(1, n)
            n_right = n - n_left
            ones_right = total_ones - ones_left
            # weighted gini of both children, scaled by n (constant factor)
            p1l = ones_left / n_left
            p1r = ones_right / n_right
            score = n_left * p1l * (1 - p1l) + n_right * p1r * (1 - p1r)
            valid = (sv[:-1] < sv[1:]) & (n_left >= min_leaf) & (n_right >= min_leaf)
            if not np.any(valid):
                continue
            score = np.where(valid, score, np.inf)
            k = int(np.argmin(score))
            if score[k] < best_score:
                best_score = float(score[k])
                best = (int(feat), float((sv[k] + sv[k + 1]) / 2.0))
        return best

    def as_tree(self) -> Tree:
        def arr(data, dtype):
            out = np.asarray(data, dtype=dtype)
            out.setflags(write=False)
            return out
        return Tree(
            feature=arr(self.feature, np.int64),
            threshold=arr(self.threshold, float),
            left=arr(self.left, np.int64),
            right=arr(self.right, np.int64),
            value=arr(self.value, np.int64),
        )


def _grow_tree(x, y, hyper, seed, tree_idx) -> Tree:
    rng = np.random.default_rng(np.random.SeedSequence((seed, tree_idx)))
    boot = rng.integers(0, x.shape[0], size=x.shape[0])
    builder = _TreeBuilder(x, y, hyper, rng)
    builder.build(boot)
    return builder.as_tree()


def rf_train(ds, hyper: RfHyper = RfHyper(), seed: int = 0,
             n_workers: int = 1) -> ForestModel:
    """Fit a forest on a handover dataset; deterministic for a fixed seed
    regardless of n_workers."""
    x = ds.features
    y = ds.target.astype(np.int64)
    if x.shape[0] < 2:
        raise TrainingError("dataset too small to train a forest")
    if y.min() == y.max():
        raise TrainingError("dataset contains a single class")
    if n_workers <= 1:
        trees = [_grow_tree(x, y, hyper, seed, i) for i in range(hyper.n_trees)]
    else:
        with ThreadPoolExecutor(max_workers=n_workers) as pool:
            trees = list(pool.map(lambda i: _grow_tree(x, y, hyper, seed, i),
                                  range(hyper.n_trees)))
    return ForestModel(trees=tuple(trees), hyper=hyper, seed=seed,
                       n_features=x.shape[1])


def rf_predict_batch(model: ForestModel, x_matrix) -> tuple[np.ndarray, np.ndarray]:
    """(labels, fraction of trees voting 1) for a matrix of feature rows."""
    xm = np.atleast_2d(np.asarray(x_matrix, dtype=float))
    if xm.shape[1] != model.n_features:
        raise DatasetError(f"expected {model.n_features} features, got {xm.shape[1]}")
    if not np.all(np.isfinite(xm)):
        raise DatasetError("features must be finite")
    votes = np.zeros(xm.shape[0])
    for tree in model.trees:
        votes += tree.apply(xm)
    prob = votes / len(model.trees)
    # majority vote; exact tie -> 0 (no handover)
    labels = (prob > 0.5).astype(np.int64)
    return labels, prob


def rf_predict(model: ForestModel, x) -> tuple[int, float]:
    labels, prob = rf_predict_batch(model, np.asarray(x, dtype=float).reshape(1, -1))
    return int(labels[0]), float(prob[0])

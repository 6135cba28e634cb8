"""Binary CART classifier used for propensity scoring: greedy Gini splits,
minimum leaf size, depth cap.

The split-scan inner loop dominates runtime once the permutation null enters
the picture (each report refits the tree ~100 times), so it is implemented as
a compiled Cython kernel with a pure-numpy fallback chosen at import time.
Set TABSYNTH_PURE=1 to force the fallback.
"""

from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np


def _best_split_sorted_py(xs: np.ndarray, ys: np.ndarray, min_leaf: int):
    """Numpy fallback for the split scan; same contract as the Cython kernel."""
    n = xs.shape[0]
    if n < 2 * min_leaf:
        return np.inf, np.nan, 0
    ones_left = np.cumsum(ys)[:-1]
    nl = np.arange(1, n, dtype=float)
    nr = n - nl
    valid = (xs[:-1] != xs[1:]) & (nl >= min_leaf) & (nr >= min_leaf)
    if not valid.any():
        return np.inf, np.nan, 0
    pl = ones_left / nl
    pr = (ones_left[-1] + ys[-1] - ones_left) / nr
    gini = nl * 2.0 * pl * (1.0 - pl) + nr * 2.0 * pr * (1.0 - pr)
    gini[~valid] = np.inf
    i = int(np.argmin(gini))  # first minimum = lowest threshold
    return gini[i] / n, 0.5 * (xs[i] + xs[i + 1]), i + 1


if os.environ.get("TABSYNTH_PURE"):
    best_split_sorted = _best_split_sorted_py
    KERNEL = "python"
else:
    try:
        from ._split_fast import best_split_sorted

        KERNEL = "cython"
    except ImportError:
        best_split_sorted = _best_split_sorted_py
        KERNEL = "python"


@dataclass
class TreeNode:
    """Either a split (feature/threshold with children) or a leaf
    (probability = fraction of label-1 training rows)."""

    n: int
    prob: float
    feature: int = -1
    threshold: float = float("nan")
    left: "TreeNode | None" = None
    right: "TreeNode | None" = None

    @property
    def is_leaf(self) -> bool:
        return self.left is None


def _gini(labels: np.ndarray) -> float:
    p = labels.mean()
    return 2.0 * p * (1.0 - p)


def _build(x: np.ndarray, y: np.ndarray, depth: int, min_leaf: int, max_depth: int) -> TreeNode:
    node = TreeNode(n=y.size, prob=float(y.mean()))
    if depth >= max_depth or node.prob in (0.0, 1.0) or y.size < 2 * min_leaf:
        return node
    best = (np.inf, np.nan, -1)
    for j in range(x.shape[1]):
        order = np.argsort(x[:, j], kind="stable")
        gini, thresh, _ = best_split_sorted(
            np.ascontiguousarray(x[order, j]), np.ascontiguousarray(y[order]), min_leaf
        )
        if gini < best[0]:
            best = (gini, thresh, j)
    gini, thresh, j = best
    if j < 0 or gini >= _gini(y):
        return node
    mask = x[:, j] <= thresh
    node.feature = j
    node.threshold = float(thresh)
    node.left = _build(x[mask], y[mask], depth + 1, min_leaf, max_depth)
    node.right = _build(x[~mask], y[~mask], depth + 1, min_leaf, max_depth)
    return node


def fit_cart(
    features: np.ndarray,
    labels: np.ndarray,
    min_leaf: int = 20,
    max_depth: int = 25,
    seed=None,
) -> TreeNode:
    """Greedy Gini tree. Ties are broken by lowest column index then lowest
    threshold, so the fit is deterministic regardless of seed."""
    x = np.asarray(features, dtype=float)
    y = np.asarray(labels, dtype=float)
    if x.ndim != 2 or x.shape[0] == 0:
        raise ValueError("features must be a non-empty 2-D matrix")
    if y.shape != (x.shape[0],):
        raise ValueError("labels must align with feature rows")
    return _build(x, y, 0, min_leaf, max_depth)


def predict_proba(tree: TreeNode, x: np.ndarray) -> float:
    """Route one row to its leaf; <= goes left."""
    node = tree
    while not node.is_leaf:
        node = node.left if x[node.feature] <= node.threshold else node.right
    return node.prob


def predict_proba_batch(tree: TreeNode, x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    out = np.empty(x.shape[0])
    stack = [(tree, np.arange(x.shape[0]))]
    while stack:
        node, idx = stack.pop()
        if node.is_leaf:
            out[idx] = node.prob
            continue
        mask = x[idx, node.feature] <= node.threshold
        stack.append((node.left, idx[mask]))
        stack.append((node.right, idx[~mask]))
    return out


def tree_depth(tree: TreeNode) -> int:
    if tree.is_leaf:
        return 0
    return 1 + max(tree_depth(tree.left), tree_depth(tree.right))


def training_gini(tree: TreeNode) -> float:
    """Weighted Gini impurity of the fitted leaves over the training rows."""
    total = tree.n

    def walk(node):
        if node.is_leaf:
            return node.n * 2.0 * node.prob * (1.0 - node.prob)
        return walk(node.left) + walk(node.right)

    return walk(tree) / total

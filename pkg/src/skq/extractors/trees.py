"""Binary CART trees grown best-first.

Regression splits maximize the reduction of the squared error, classification
splits the reduction of weighted Gini impurity. Thresholds are midpoints
between consecutive distinct values and instances with ``x <= threshold``
go left.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass

import numpy as np

REGRESSION, CLASSIFICATION = "regression", "classification"


@dataclass
class _Node:
    index: np.ndarray
    depth: int
    value: object
    feature: int = -1
    threshold: float = 0.0
    left: int = -1
    right: int = -1
    # best split found when the node was created, applied if it gets expanded
    gain: float = 0.0
    split: tuple | None = None


@dataclass
class Tree:
    """A fitted tree; node 0 is the root, leaves have ``feature == -1``."""

    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray
    task: str
    gains: np.ndarray  # total impurity decrease credited to each feature

    @property
    def n_leaves(self) -> int:
        return int(np.sum(self.feature < 0))

    @property
    def depth(self) -> int:
        depths = np.zeros(len(self.feature), dtype=int)
        for i in range(len(self.feature)):
            if self.feature[i] >= 0:
                depths[self.left[i]] = depths[self.right[i]] = depths[i] + 1
        return int(depths.max())

    def apply(self, X: np.ndarray) -> np.ndarray:
        """Leaf index reached by every row of ``X``."""
        X = np.asarray(X, dtype=float)
        node = np.zeros(len(X), dtype=int)
        active = self.feature[node] >= 0
        while active.any():
            rows = np.nonzero(active)[0]
            cur = node[rows]
            go_left = X[rows, self.feature[cur]] <= self.threshold[cur]
            node[rows] = np.where(go_left, self.left[cur], self.right[cur])
            active = self.feature[node] >= 0
        return node

    def predict(self, X: np.ndarray) -> np.ndarray:
        return self.value[self.apply(X)]


def _midpoint(a: float, b: float) -> float:
    mid = (a + b) / 2.0
    # rounding can push the midpoint onto the upper value
    return a if mid >= b else mid


def _best_split(X, y, codes, n_classes, index, features, task):
    """(gain, feature, threshold) of the best split of ``index``, or None."""
    best = None
    n = len(index)
    if task == REGRESSION:
        yy = y[index] - y[index].mean()
        parent = float(np.sum(yy ** 2))
        if parent <= 0.0:
            return None
    else:
        counts = np.bincount(codes[index], minlength=n_classes).astype(float)
        parent = n - float(np.sum(counts ** 2)) / n
        if parent <= 0.0:
            return None
    for f in features:
        x = X[index, f]
        order = np.argsort(x, kind="stable")
        xs = x[order]
        valid = xs[:-1] < xs[1:]
        if not valid.any():
            continue
        n_left = np.arange(1, n)
        if task == REGRESSION:
            ys = yy[order]
            csum = np.cumsum(ys)[:-1]
            total = csum[-1] + ys[-1]
            # centered data: SSE reduction equals sL^2/nL + sR^2/nR
            gain = csum ** 2 / n_left + (total - csum) ** 2 / (n - n_left)
        else:
            onehot = np.zeros((n, n_classes))
            onehot[np.arange(n), codes[index][order]] = 1.0
            cl = np.cumsum(onehot, axis=0)[:-1]
            cr = counts - cl
            # weighted Gini of the children: nL - sum(cl^2)/nL + nR - sum(cr^2)/nR
            child = (n_left - np.sum(cl ** 2, axis=1) / n_left) \
                + ((n - n_left) - np.sum(cr ** 2, axis=1) / (n - n_left))
            gain = parent - child
        gain = np.where(valid, gain, -np.inf)
        i = int(np.argmax(gain))
        g = float(gain[i])
        if g > 1e-12 * max(parent, 1e-300) and (best is None or g > best[0]):
            best = (g, f, _midpoint(float(xs[i]), float(xs[i + 1])))
    return best


def fit_tree(X, y, task: str = REGRESSION, max_depth: int | None = None,
             max_leaves: int | None = None, max_features: int | None = None,
             rng: np.random.Generator | None = None, classes=None) -> Tree:
    """Grow a tree best-first until ``max_leaves`` or no useful split remains.

    ``max_features`` features are drawn (without replacement, by ``rng``)
    for every candidate node; ``None`` considers all features.
    """
    X = np.asarray(X, dtype=float)
    n, d = X.shape
    if n == 0:
        raise ValueError("cannot fit a tree on zero instances")
    if max_leaves is not None and max_leaves < 1:
        raise ValueError("max_leaves must be positive")
    if max_depth is not None and max_depth < 0:
        raise ValueError("max_depth must be non-negative")
    if task == REGRESSION:
        y = np.asarray(y, dtype=float)
        codes, n_classes = None, 0
    elif task == CLASSIFICATION:
        y = np.asarray(y).astype(str)
        classes = np.array(sorted(set(y.tolist()) if classes is None else classes), dtype=object)
        codes = np.searchsorted(classes.astype(str), y)
        n_classes = len(classes)
    else:
        raise ValueError(f"unknown task {task!r}")
    rng = rng if rng is not None else np.random.default_rng(0)
    k = d if max_features is None else max(1, min(d, int(max_features)))

    def leaf_value(index):
        if task == REGRESSION:
            return float(y[index].mean())
        counts = np.bincount(codes[index], minlength=n_classes)
        return classes[int(np.argmax(counts))]

    def make(index, depth):
        node = _Node(index, depth, leaf_value(index))
        if max_depth is None or depth < max_depth:
            features = np.arange(d) if k == d else np.sort(rng.choice(d, size=k, replace=False))
            found = _best_split(X, y, codes, n_classes, index, features, task)
            if found is not None:
                node.gain, node.split = found[0], (found[1], found[2])
        nodes.append(node)
        if node.split is not None:
            heapq.heappush(heap, (-node.gain, len(nodes) - 1))
        return len(nodes) - 1

    nodes: list = []
    heap: list = []
    gains = np.zeros(d)
    make(np.arange(n), 0)
    leaves = 1
    while heap and (max_leaves is None or leaves < max_leaves):
        _, i = heapq.heappop(heap)
        node = nodes[i]
        f, thr = node.split
        mask = X[node.index, f] <= thr
        node.feature, node.threshold = f, thr
        gains[f] += node.gain
        node.left = make(node.index[mask], node.depth + 1)
        node.right = make(node.index[~mask], node.depth + 1)
        leaves += 1

    values = np.empty(len(nodes), dtype=float if task == REGRESSION else object)
    for i, node in enumerate(nodes):
        values[i] = node.value
    return Tree(
        feature=np.array([nd.feature for nd in nodes], dtype=int),
        threshold=np.array([nd.threshold for nd in nodes], dtype=float),
        left=np.array([nd.left for nd in nodes], dtype=int),
        right=np.array([nd.right for nd in nodes], dtype=int),
        value=values, task=task, gains=gains,
    )

"""CART decision trees with a reprogrammable node representation.

Every internal node stores a feature offset into the input payload and
a threshold weight; evaluation walks root-to-leaf taking the right
child when ``x[offset] > threshold``. Leaves store empirical class
distributions. The node array round-trips through a versioned textual
record so trained trees can be loaded into the queue-based simulator.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin

__all__ = [
    "TreeNode",
    "CartTree",
    "train_cart",
    "serialize_tree",
    "deserialize_tree",
]

_FORMAT_VERSION = 1


@dataclass
class TreeNode:
    """One node: internal (children set) xor leaf (distribution set)."""

    feature_offset: int = -1
    threshold: float = 0.0
    left: int = -1
    right: int = -1
    distribution: np.ndarray | None = None

    @property
    def is_leaf(self) -> bool:
        return self.distribution is not None


def _gini_from_counts(counts: np.ndarray, totals: np.ndarray) -> np.ndarray:
    # counts: (m, n_labels), totals: (m,) with totals > 0
    p = counts / totals[:, None]
    return 1.0 - np.sum(p * p, axis=1)


class CartTree(BaseEstimator, ClassifierMixin):
    """Binary CART classifier grown greedily by Gini impurity.

    Candidate thresholds are midpoints between consecutive distinct
    sorted feature values, restricted to ``feature_subset``. Ties in
    impurity break toward the lowest feature index, then the lowest
    threshold, so training is fully deterministic. ``rng_seed`` only
    matters when ``feature_subset`` is None: a random subset of
    ceil(sqrt(n_features)) features is drawn.
    """

    def __init__(self, max_depth: int = 12, min_leaf: int = 1,
                 feature_subset=None, rng_seed: int = 0):
        self.max_depth = max_depth
        self.min_leaf = min_leaf
        self.feature_subset = feature_subset
        self.rng_seed = rng_seed

    def fit(self, X, y, n_labels: int | None = None,
            sample_indices: np.ndarray | None = None) -> "CartTree":
        if self.max_depth < 1:
            raise ValueError("max_depth must be >= 1")
        if self.min_leaf < 1:
            raise ValueError("min_leaf must be >= 1")
        X = np.asarray(X, dtype=np.float64)
        y = np.asarray(y, dtype=np.int64)
        if X.ndim != 2 or len(X) != len(y):
            raise ValueError("X must be 2-D and aligned with y")
        if len(y) == 0:
            raise ValueError("cannot train a tree on an empty dataset")
        if sample_indices is not None:
            X, y = X[sample_indices], y[sample_indices]

        self.n_features_ = X.shape[1]
        self.n_labels_ = int(n_labels if n_labels is not None else y.max() + 1)
        if self.feature_subset is not None:
            subset = sorted(int(f) for f in self.feature_subset)
        else:
            m = math.ceil(math.sqrt(self.n_features_))
            rng = np.random.default_rng(self.rng_seed)
            subset = sorted(rng.choice(self.n_features_, size=m, replace=False).tolist())
        if not subset:
            raise ValueError("feature_subset must be non-empty")
        if subset[0] < 0 or subset[-1] >= self.n_features_:
            raise ValueError("feature_subset indices out of range")
        self.feature_subset_ = subset

        self.nodes_: list[TreeNode] = []
        self._grow(X, y, depth=0)
        return self

    def _leaf(self, y: np.ndarray) -> int:
        counts = np.bincount(y, minlength=self.n_labels_)
        node = TreeNode(distribution=counts / counts.sum())
        self.nodes_.append(node)
        return len(self.nodes_) - 1

    def _best_split(self, X: np.ndarray, y: np.ndarray):
        """Lowest-weighted-Gini (feature, threshold); None if no valid cut."""
        n = len(y)
        best = None  # (gini, feature, threshold)
        for feat in self.feature_subset_:
            order = np.argsort(X[:, feat], kind="stable")
            xs = X[order, feat]
            ys = y[order]
            cuts = np.nonzero(xs[:-1] != xs[1:])[0] + 1  # left sizes at value boundaries
            cuts = cuts[(cuts >= self.min_leaf) & (cuts <= n - self.min_leaf)]
            if len(cuts) == 0:
                continue
            onehot = np.zeros((n, self.n_labels_))
            onehot[np.arange(n), ys] = 1.0
            prefix = np.cumsum(onehot, axis=0)
            left = prefix[cuts - 1]
            right = prefix[-1] - left
            n_left = cuts.astype(np.float64)
            n_right = n - n_left
            weighted = (
                n_left * _gini_from_counts(left, n_left)
                + n_right * _gini_from_counts(right, n_right)
            ) / n
            i = int(np.argmin(weighted))  # argmin keeps the lowest threshold on ties
            gini = float(weighted[i])
            thr = float((xs[cuts[i] - 1] + xs[cuts[i]]) / 2.0)
            if best is None or gini < best[0]:
                best = (gini, feat, thr)
        return best

    def _grow(self, X: np.ndarray, y: np.ndarray, depth: int) -> int:
        if depth >= self.max_depth or len(y) < 2 * self.min_leaf or len(np.unique(y)) == 1:
            return self._leaf(y)
        found = self._best_split(X, y)
        if found is None:
            return self._leaf(y)
        _, feat, thr = found
        node_id = len(self.nodes_)
        self.nodes_.append(TreeNode(feature_offset=feat, threshold=thr))
        go_right = X[:, feat] > thr
        self.nodes_[node_id].left = self._grow(X[~go_right], y[~go_right], depth + 1)
        self.nodes_[node_id].right = self._grow(X[go_right], y[go_right], depth + 1)
        return node_id

    def walk(self, x: np.ndarray) -> tuple[np.ndarray, int]:
        """Root-to-leaf walk; returns (leaf distribution, comparisons made)."""
        node = self.nodes_[0]
        comparisons = 0
        while not node.is_leaf:
            comparisons += 1
            child = node.right if x[node.feature_offset] > node.threshold else node.left
            node = self.nodes_[child]
        return node.distribution, comparisons

    def predict_proba(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        return np.stack([self.walk(x)[0] for x in X])

    def predict(self, X) -> np.ndarray:
        return np.argmax(self.predict_proba(X), axis=1)


def train_cart(train, max_depth: int = 12, min_leaf: int = 1,
               feature_subset=None, rng_seed: int = 0) -> CartTree:
    """Train a CART tree from a Dataset."""
    tree = CartTree(max_depth=max_depth, min_leaf=min_leaf,
                    feature_subset=feature_subset, rng_seed=rng_seed)
    return tree.fit(train.features, train.labels, n_labels=train.n_labels)


def serialize_tree(tree: CartTree) -> str:
    """Versioned, human-diffable textual record; one line per node."""
    subset = ",".join(str(f) for f in tree.feature_subset_)
    lines = [
        f"tree v{_FORMAT_VERSION} n_features {tree.n_features_} "
        f"n_labels {tree.n_labels_} max_depth {tree.max_depth} feature_subset {subset}"
    ]
    for node_id, node in enumerate(tree.nodes_):
        if node.is_leaf:
            dist = ",".join(f"{p:.17g}" for p in node.distribution)
            lines.append(f"leaf {node_id} dist {dist}")
        else:
            lines.append(
                f"node {node_id} feat {node.feature_offset} "
                f"thr {node.threshold:.17g} L {node.left} R {node.right}"
            )
    return "\n".join(lines) + "\n"


def deserialize_tree(record: str) -> CartTree:
    """Parse and validate a serialize_tree record (acyclicity, bounds)."""
    lines = [ln for ln in record.strip().splitlines() if ln.strip()]
    if not lines:
        raise ValueError("empty tree record")
    header = lines[0].split()
    if len(header) < 9 or header[0] != "tree":
        raise ValueError(f"malformed tree header: {lines[0]!r}")
    if header[1] != f"v{_FORMAT_VERSION}":
        raise ValueError(f"unsupported tree record version {header[1]!r}")
    meta = dict(zip(header[2::2], header[3::2]))
    n_features = int(meta["n_features"])
    n_labels = int(meta["n_labels"])
    subset = [int(f) for f in meta["feature_subset"].split(",")]

    tree = CartTree(max_depth=int(meta["max_depth"]), min_leaf=1, feature_subset=subset)
    tree.n_features_ = n_features
    tree.n_labels_ = n_labels
    tree.feature_subset_ = subset
    nodes: dict[int, TreeNode] = {}
    for line in lines[1:]:
        parts = line.split()
        if parts[0] == "node" and len(parts) == 10:
            node_id = int(parts[1])
            offset = int(parts[3])
            if offset < 0 or offset >= n_features:
                raise ValueError(f"node {node_id}: feature offset {offset} out of range")
            nodes[node_id] = TreeNode(
                feature_offset=offset, threshold=float(parts[5]),
                left=int(parts[7]), right=int(parts[9]),
            )
        elif parts[0] == "leaf" and len(parts) == 4:
            dist = np.array([float(p) for p in parts[3].split(",")])
            if len(dist) != n_labels:
                raise ValueError(f"leaf {parts[1]}: distribution length != n_labels")
            if abs(dist.sum() - 1.0) > 1e-9:
                raise ValueError(f"leaf {parts[1]}: distribution does not sum to 1")
            nodes[int(parts[1])] = TreeNode(distribution=dist)
        else:
            raise ValueError(f"malformed tree record line: {line!r}")

    if sorted(nodes) != list(range(len(nodes))):
        raise ValueError("tree record has missing or duplicate node ids")
    tree.nodes_ = [nodes[i] for i in range(len(nodes))]
    _check_structure(tree)
    return tree


def _check_structure(tree: CartTree) -> None:
    """Reject cycles, dangling children, and multiply-referenced nodes."""
    seen: set[int] = set()
    stack = [0]
    while stack:
        node_id = stack.pop()
        if node_id in seen:
            raise ValueError(f"tree record contains a cycle or shared node at {node_id}")
        if node_id < 0 or node_id >= len(tree.nodes_):
            raise ValueError(f"tree record references missing node {node_id}")
        seen.add(node_id)
        node = tree.nodes_[node_id]
        if not node.is_leaf:
            stack.append(node.left)
            stack.append(node.right)
    if len(seen) != len(tree.nodes_):
        raise ValueError("tree record contains unreachable nodes")

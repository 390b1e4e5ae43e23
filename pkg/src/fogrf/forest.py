"""Random forest training, voting, grove splitting, and budgeted growth.

A forest is an ordered list of CART trees, each trained on a bootstrap
sample with its own random feature subset. Splitting carves the
estimator list into consecutive groves of ``k`` trees; grove order
concatenates back to forest order.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin

from . import fog
from .costmodel import CostParams, edp, pe_latency_cycles
from .tree import CartTree, deserialize_tree, serialize_tree

__all__ = [
    "GroveOutput",
    "Grove",
    "RandomForest",
    "FieldOfGroves",
    "Budget",
    "BudgetError",
    "split_forest",
    "gc_train",
    "budget_rf_train",
    "save_field",
    "load_field",
]


class GroveOutput(NamedTuple):
    dist: np.ndarray
    comparisons: int
    max_depth: int  # deepest path visited among member trees


@dataclass
class Grove:
    """A small sub-forest; the unit of hop-chained evaluation."""

    estimators: list[CartTree]
    index: int

    def __post_init__(self) -> None:
        if not self.estimators:
            raise ValueError("grove must contain at least one tree")

    def predict_prob(self, x: np.ndarray) -> GroveOutput:
        """Unweighted mean of member tree distributions."""
        total = None
        comparisons = 0
        max_depth = 0
        for tree in self.estimators:
            dist, n_cmp = tree.walk(x)
            total = dist.copy() if total is None else total + dist
            comparisons += n_cmp
            max_depth = max(max_depth, n_cmp)
        return GroveOutput(total / len(self.estimators), comparisons, max_depth)


class RandomForest(BaseEstimator, ClassifierMixin):
    """Bagged CART forest with majority and soft voting.

    Tree ``i`` trains on a bootstrap sample and feature subset drawn
    from seed ``seed + i``, so per-tree training is reproducible and
    parallelizable.
    """

    def __init__(self, n_trees: int = 16, max_depth: int = 12, min_leaf: int = 1,
                 features_per_tree: int | None = None, seed: int = 0):
        self.n_trees = n_trees
        self.max_depth = max_depth
        self.min_leaf = min_leaf
        self.features_per_tree = features_per_tree
        self.seed = seed

    def fit(self, X, y, n_labels: int | None = None) -> "RandomForest":
        if self.n_trees < 1:
            raise ValueError("n_trees must be >= 1")
        X = np.asarray(X, dtype=np.float64)
        y = np.asarray(y, dtype=np.int64)
        self.n_features_ = X.shape[1]
        self.n_labels_ = int(n_labels if n_labels is not None else y.max() + 1)
        self.estimators_ = [self._train_tree(X, y, i) for i in range(self.n_trees)]
        return self

    def _train_tree(self, X: np.ndarray, y: np.ndarray, index: int) -> CartTree:
        rng = np.random.default_rng(self.seed + index)
        m = self.features_per_tree or math.ceil(math.sqrt(self.n_features_))
        m = min(m, self.n_features_)
        subset = sorted(rng.choice(self.n_features_, size=m, replace=False).tolist())
        bootstrap = rng.integers(0, len(y), size=len(y))
        tree = CartTree(max_depth=self.max_depth, min_leaf=self.min_leaf,
                        feature_subset=subset, rng_seed=self.seed + index)
        return tree.fit(X, y, n_labels=self.n_labels_, sample_indices=bootstrap)

    def predict_soft_one(self, x: np.ndarray) -> np.ndarray:
        """Unweighted mean of tree distributions."""
        total = np.zeros(self.n_labels_)
        for tree in self.estimators_:
            total += tree.walk(x)[0]
        return total / len(self.estimators_)

    def predict_soft(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        return np.stack([self.predict_soft_one(x) for x in X])

    def predict_majority(self, X) -> np.ndarray:
        """Argmax of per-tree argmax votes; ties toward the lowest label."""
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        labels = np.empty(len(X), dtype=int)
        for i, x in enumerate(X):
            votes = np.zeros(self.n_labels_, dtype=int)
            for tree in self.estimators_:
                votes[fog.argmax_lowest(tree.walk(x)[0])] += 1
            labels[i] = fog.argmax_lowest(votes)
        return labels

    def predict_proba(self, X) -> np.ndarray:
        return self.predict_soft(X)

    def predict(self, X) -> np.ndarray:
        return np.argmax(self.predict_soft(X), axis=1)


def split_forest(rf: RandomForest, k: int) -> "FieldOfGroves":
    """Partition estimators into consecutive groves of at most k trees."""
    if k < 1:
        raise ValueError("k must be >= 1")
    n = len(rf.estimators_)
    if n % k != 0:
        warnings.warn(
            f"{n} trees do not divide evenly into groves of {k}; the short "
            "final grove is weighted equally with full groves", stacklevel=2,
        )
    groves = [
        Grove(estimators=rf.estimators_[i : i + k], index=i // k)
        for i in range(0, n, k)
    ]
    field = FieldOfGroves(n_trees=rf.n_trees, grove_size=k, max_depth=rf.max_depth,
                          min_leaf=rf.min_leaf, features_per_tree=rf.features_per_tree,
                          seed=rf.seed)
    field._attach(groves, rf)
    return field


class FieldOfGroves(BaseEstimator, ClassifierMixin):
    """Forest split into a ring of groves, evaluated with early exit."""

    def __init__(self, n_trees: int = 16, grove_size: int = 2, max_depth: int = 12,
                 min_leaf: int = 1, features_per_tree: int | None = None,
                 seed: int = 0, thresh: float = 0.5, max_hops: int | None = None):
        self.n_trees = n_trees
        self.grove_size = grove_size
        self.max_depth = max_depth
        self.min_leaf = min_leaf
        self.features_per_tree = features_per_tree
        self.seed = seed
        self.thresh = thresh
        self.max_hops = max_hops

    def _attach(self, groves: list[Grove], rf: RandomForest) -> None:
        self.groves_ = groves
        self.forest_ = rf
        self.n_groves_ = len(groves)
        self.n_features_ = rf.n_features_
        self.n_labels_ = rf.n_labels_

    def fit(self, X, y, n_labels: int | None = None) -> "FieldOfGroves":
        if not 1 <= self.grove_size <= self.n_trees:
            raise ValueError("grove_size must lie in [1, n_trees]")
        rf = RandomForest(n_trees=self.n_trees, max_depth=self.max_depth,
                          min_leaf=self.min_leaf, features_per_tree=self.features_per_tree,
                          seed=self.seed).fit(X, y, n_labels=n_labels)
        field = split_forest(rf, self.grove_size)
        self._attach(field.groves_, rf)
        return self

    def eval_config(self) -> fog.EvalConfig:
        return fog.EvalConfig(thresh=self.thresh, max_hops=self.max_hops, seed=self.seed)

    def evaluate(self, X, cfg: fog.EvalConfig | None = None,
                 start_groves=None, input_ids=None) -> list[fog.EvalResult]:
        return fog.gc_eval(X, self, cfg or self.eval_config(),
                           start_groves=start_groves, input_ids=input_ids)

    def predict(self, X) -> np.ndarray:
        return np.array([r.label for r in self.evaluate(X)])

    def predict_proba(self, X) -> np.ndarray:
        return np.stack([r.prob_norm for r in self.evaluate(X)])


def gc_train(n: int, k: int, train, max_depth: int = 12, min_leaf: int = 1,
             features_per_tree: int | None = None, seed: int = 0) -> FieldOfGroves:
    """Train an n-tree forest and split it into groves of k trees."""
    if n < 1 or not 1 <= k <= n:
        raise ValueError(f"need n >= 1 and 1 <= k <= n, got n={n}, k={k}")
    field = FieldOfGroves(n_trees=n, grove_size=k, max_depth=max_depth,
                          min_leaf=min_leaf, features_per_tree=features_per_tree,
                          seed=seed)
    return field.fit(train.features, train.labels, n_labels=train.n_labels)


@dataclass(frozen=True)
class Budget:
    metric: str  # "energy" | "delay" | "edp" | "accuracy"
    limit: float  # J, s, J*s, or accuracy fraction

    def __post_init__(self) -> None:
        if self.metric not in ("energy", "delay", "edp", "accuracy"):
            raise ValueError(f"unknown budget metric {self.metric!r}")
        if self.limit <= 0:
            raise ValueError("budget limit must be > 0")


class BudgetError(ValueError):
    """Budget too small for even a single tree."""


def _forest_validation_cost(trees: list[CartTree], validation, cost: CostParams):
    """Mean per-classification (energy, delay_s, edp, accuracy) on validation data."""
    n_labels = trees[0].n_labels_
    energies = []
    delays = []
    correct = 0
    for x, label in zip(validation.features, validation.labels):
        total = np.zeros(n_labels)
        comparisons = 0
        depth = 0
        for tree in trees:
            dist, n_cmp = tree.walk(x)
            total += dist
            comparisons += n_cmp
            depth = max(depth, n_cmp)
        energies.append(comparisons * cost.e_compare)
        cycles = pe_latency_cycles(len(trees), 1, depth, n_labels, cost)
        delays.append(cycles / cost.clock_hz)
        if fog.argmax_lowest(total) == label:
            correct += 1
    mean_energy = float(np.mean(energies))
    mean_delay = float(np.mean(delays))
    return {
        "energy": mean_energy,
        "delay": mean_delay,
        "edp": mean_energy * mean_delay,
        "accuracy": correct / len(validation.labels),
    }


def budget_rf_train(train, validation, budget: Budget, cost: CostParams,
                    n_max: int = 16, max_depth: int = 12, min_leaf: int = 1,
                    features_per_tree: int | None = None, seed: int = 0) -> RandomForest:
    """Grow the forest tree by tree while mean validation cost stays under budget.

    Returns the largest forest meeting the budget; the accuracy metric
    instead stops as soon as validation accuracy reaches the limit. The
    (size, accuracy, cost) trajectory lands in ``history_``.
    """
    proto = RandomForest(n_trees=n_max, max_depth=max_depth, min_leaf=min_leaf,
                         features_per_tree=features_per_tree, seed=seed)
    X = np.asarray(train.features, dtype=np.float64)
    y = np.asarray(train.labels, dtype=np.int64)
    proto.n_features_ = X.shape[1]
    proto.n_labels_ = train.n_labels

    trees: list[CartTree] = []
    history: list[dict] = []
    for i in range(n_max):
        candidate = trees + [proto._train_tree(X, y, i)]
        stats = _forest_validation_cost(candidate, validation, cost)
        value = stats[budget.metric]
        if budget.metric == "accuracy":
            trees = candidate
            history.append({"n_trees": len(trees), **stats})
            if value >= budget.limit:
                break
        else:
            if value > budget.limit:
                if not trees:
                    raise BudgetError(
                        f"budget {budget.limit} {budget.metric} is below the "
                        f"cost of a single tree ({value})"
                    )
                break
            trees = candidate
            history.append({"n_trees": len(trees), **stats})

    rf = RandomForest(n_trees=len(trees), max_depth=max_depth, min_leaf=min_leaf,
                      features_per_tree=features_per_tree, seed=seed)
    rf.n_features_ = proto.n_features_
    rf.n_labels_ = proto.n_labels_
    rf.estimators_ = trees
    rf.history_ = history
    return rf


_FIELD_VERSION = 1


def save_field(field: FieldOfGroves, path) -> None:
    """Write the field model file: header + concatenated tree records."""
    grove_sizes = ",".join(str(len(g.estimators)) for g in field.groves_)
    lines = [
        f"fieldofgroves v{_FIELD_VERSION} n_groves {field.n_groves_} "
        f"k {field.grove_size} n_features {field.n_features_} "
        f"n_labels {field.n_labels_} grove_sizes {grove_sizes}"
    ]
    for grove in field.groves_:
        for tree in grove.estimators:
            lines.append(serialize_tree(tree).rstrip("\n"))
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def load_field(path) -> FieldOfGroves:
    with open(path, "r", encoding="utf-8") as fh:
        content = fh.read()
    lines = content.strip().splitlines()
    header = lines[0].split()
    if not header or header[0] != "fieldofgroves":
        raise ValueError(f"{path}: not a field model file")
    if header[1] != f"v{_FIELD_VERSION}":
        raise ValueError(f"{path}: unsupported model version {header[1]!r}")
    meta = dict(zip(header[2::2], header[3::2]))
    grove_sizes = [int(s) for s in meta["grove_sizes"].split(",")]

    # split remaining lines into per-tree records on "tree " headers
    records: list[list[str]] = []
    for line in lines[1:]:
        if line.startswith("tree "):
            records.append([])
        if not records:
            raise ValueError(f"{path}: content before first tree record")
        records[-1].append(line)
    trees = [deserialize_tree("\n".join(rec)) for rec in records]
    if len(trees) != sum(grove_sizes):
        raise ValueError(f"{path}: tree count does not match grove sizes")
    for tree in trees:
        if tree.n_features_ != int(meta["n_features"]) or tree.n_labels_ != int(meta["n_labels"]):
            raise ValueError(f"{path}: tree shape disagrees with header")

    rf = RandomForest(n_trees=len(trees))
    rf.n_features_ = int(meta["n_features"])
    rf.n_labels_ = int(meta["n_labels"])
    rf.estimators_ = trees

    groves = []
    pos = 0
    for i, size in enumerate(grove_sizes):
        groves.append(Grove(estimators=trees[pos : pos + size], index=i))
        pos += size
    field = FieldOfGroves(n_trees=len(trees), grove_size=int(meta["k"]))
    field._attach(groves, rf)
    return field

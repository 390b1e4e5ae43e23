import numpy as np
import pytest

from fogrf.dataset import Dataset
from fogrf.forest import GroveOutput
from fogrf.tree import CartTree, TreeNode


def make_gaussian_dataset(seed=0, n=300, n_features=8, n_labels=3, scale=1.0, name="gauss"):
    """Overlapping Gaussian blobs in [0,1]^d; harder as scale grows."""
    rng = np.random.default_rng(seed)
    centers = rng.normal(size=(n_labels, n_features))
    labels = rng.integers(0, n_labels, size=n)
    features = centers[labels] + rng.normal(scale=scale, size=(n, n_features))
    lo, hi = features.min(axis=0), features.max(axis=0)
    features = (features - lo) / np.where(hi > lo, hi - lo, 1.0)
    return Dataset(name=name, features=features, labels=labels,
                   n_features=n_features, n_labels=n_labels)


def leaf_tree(dist, n_features=2):
    """Single-leaf tree that always returns the given distribution."""
    tree = CartTree(max_depth=1, feature_subset=[0])
    tree.n_features_ = n_features
    tree.n_labels_ = len(dist)
    tree.feature_subset_ = [0]
    tree.nodes_ = [TreeNode(distribution=np.asarray(dist, dtype=np.float64))]
    return tree


class StubGrove:
    """Grove returning a scripted distribution regardless of input."""

    def __init__(self, dist, index=0):
        self.dist = np.asarray(dist, dtype=np.float64)
        self.index = index
        self.estimators = [None]

    def predict_prob(self, x):
        return GroveOutput(self.dist.copy(), 0, 0)


class StubField:
    """Field wrapper around scripted groves."""

    def __init__(self, dists, n_features=5):
        self.groves_ = [
            d if isinstance(d, StubGrove) else StubGrove(d, i)
            for i, d in enumerate(dists)
        ]
        self.n_groves_ = len(self.groves_)
        self.n_labels_ = len(self.groves_[0].dist)
        self.n_features_ = n_features
        self.grove_size = 1


@pytest.fixture
def xor_dataset():
    features = np.array([[0.0, 0.0], [1.0, 1.0], [0.0, 1.0], [1.0, 0.0]])
    labels = np.array([0, 0, 1, 1])
    return Dataset(name="xor", features=features, labels=labels,
                   n_features=2, n_labels=2)


@pytest.fixture
def xor_tree(xor_dataset):
    tree = CartTree(max_depth=2, min_leaf=1, feature_subset=[0, 1])
    return tree.fit(xor_dataset.features, xor_dataset.labels, n_labels=2)

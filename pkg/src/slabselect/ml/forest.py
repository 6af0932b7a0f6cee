"""Bagged random forest of Gini trees with mean-decrease-in-impurity importance."""
import numpy as np

from slabselect import CLASSES
from slabselect.ml.base import Classifier
from slabselect.ml.tree import DecisionTree, grow


class RandomForestClassifier(Classifier):
    kind = "rf"
    scaled = False

    def __init__(self, n_trees: int = 500, feature_subset_size: int = 1, min_leaf: int = 1,
                 seed: int = 0, bootstrap: bool = True):
        super().__init__()
        if int(n_trees) != n_trees or n_trees < 1:
            raise ValueError(f"n_trees must be a positive integer, got {n_trees}")
        if int(feature_subset_size) != feature_subset_size or feature_subset_size < 1:
            raise ValueError(f"feature_subset_size must be a positive integer, got {feature_subset_size}")
        if int(min_leaf) != min_leaf or min_leaf < 1:
            raise ValueError(f"min_leaf must be a positive integer, got {min_leaf}")
        self.n_trees = int(n_trees)
        self.feature_subset_size = int(feature_subset_size)
        self.min_leaf = int(min_leaf)
        self.seed = int(seed)
        self.bootstrap = bool(bootstrap)
        self.trees = []
        self.n_features = None

    def hyperparameters(self):
        return {"n_trees": self.n_trees, "feature_subset_size": self.feature_subset_size,
                "min_leaf": self.min_leaf, "seed": self.seed, "bootstrap": self.bootstrap}

    def tree_streams(self):
        """One independent generator per tree, derived only from the master seed."""
        return [np.random.default_rng(s) for s in np.random.SeedSequence(self.seed).spawn(self.n_trees)]

    def _fit(self, X, y):
        n, self.n_features = X.shape
        self.trees = []
        for rng in self.tree_streams():
            if self.bootstrap:
                sample = rng.integers(0, n, size=n)
            else:
                sample = np.arange(n)
            keys = rng.random((max(2 * n - 1, 1), self.n_features))
            self.trees.append(grow(X, y, sample, self.feature_subset_size, self.min_leaf, keys=keys))

    def tree_votes(self, X) -> np.ndarray:
        """(n_rows, n_trees) class codes predicted by each tree."""
        self._check_fitted()
        return self._tree_votes(self._transform(X))

    def vote_counts(self, X) -> np.ndarray:
        self._check_fitted()
        return self._vote_counts(self._transform(X))

    def _tree_votes(self, Z):
        return np.column_stack([t.predict(Z) for t in self.trees])

    def _vote_counts(self, Z):
        votes = self._tree_votes(Z)
        counts = np.zeros((votes.shape[0], len(CLASSES)), dtype=np.intp)
        rows = np.arange(votes.shape[0])
        for t in range(votes.shape[1]):
            np.add.at(counts, (rows, votes[:, t]), 1)
        return counts

    def _predict(self, Z):
        # majority vote; ties to the lowest class code (alphabetical solver name)
        return np.argmax(self._vote_counts(Z), axis=1)

    def gini_importance(self) -> np.ndarray:
        """Total decrease in Gini impurity per feature, averaged over trees."""
        self._check_fitted()
        total = np.zeros(self.n_features)
        for t in self.trees:
            total += t.feature_importance(self.n_features)
        return total / self.n_trees

    def _params(self):
        return {"n_features": self.n_features, "trees": [t.to_dict() for t in self.trees]}

    def _load(self, params):
        self.n_features = int(params["n_features"])
        self.trees = [DecisionTree.from_dict(t) for t in params["trees"]]


def gini_importance(model) -> np.ndarray:
    if getattr(model, "kind", None) != "rf":
        raise TypeError(f"Gini importance needs a random forest, got {getattr(model, 'kind', model)!r}")
    return model.gini_importance()

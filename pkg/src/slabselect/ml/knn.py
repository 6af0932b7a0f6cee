"""K-nearest-neighbour vote on z-scored features."""
import numpy as np

from slabselect import CLASSES
from slabselect.ml.base import Classifier, TrainingError


def squared_distances(A, B):
    """Pairwise squared Euclidean distances, summed column by column in order."""
    d = np.zeros((A.shape[0], B.shape[0]))
    for j in range(A.shape[1]):
        diff = A[:, j][:, None] - B[:, j][None, :]
        d = d + diff * diff
    return d


class KNNClassifier(Classifier):
    kind = "knn"

    def __init__(self, k: int = 5):
        super().__init__()
        if int(k) != k or k < 1:
            raise ValueError(f"k must be a positive integer, got {k}")
        self.k = int(k)
        self.train_X = None
        self.train_y = None

    def hyperparameters(self):
        return {"k": self.k}

    def _fit(self, Z, y):
        if self.k > Z.shape[0]:
            raise TrainingError(f"k={self.k} exceeds the {Z.shape[0]} training rows")
        self.train_X = Z.copy()
        self.train_y = y.copy()

    def neighbours(self, X):
        """Indices of the k nearest training rows; equal distances keep row order."""
        self._check_fitted()
        return self._neighbours(self._transform(X))

    def _neighbours(self, Z, chunk=1024):
        out = np.empty((Z.shape[0], self.k), dtype=np.intp)
        for s in range(0, Z.shape[0], chunk):
            d = squared_distances(Z[s:s + chunk], self.train_X)
            out[s:s + chunk] = np.argsort(d, axis=1, kind="stable")[:, :self.k]
        return out

    def _predict(self, Z):
        votes = self.train_y[self._neighbours(Z)]
        rows = np.arange(votes.shape[0])
        tally = np.zeros((votes.shape[0], len(CLASSES)), dtype=np.intp)
        for j in range(self.k):
            np.add.at(tally, (rows, votes[:, j]), 1)
        winners = tally == tally.max(axis=1)[:, None]
        # among tied classes, the one holding the nearest neighbour wins
        first = np.argmax(winners[rows[:, None], votes], axis=1)
        return votes[rows, first]

    def _params(self):
        return {"train_X": self.train_X.tolist(), "train_y": self.train_y.tolist()}

    def _load(self, params):
        self.train_X = np.ascontiguousarray(params["train_X"], dtype=float)
        self.train_y = np.array(params["train_y"], dtype=np.intp)

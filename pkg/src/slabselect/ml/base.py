import numpy as np

from slabselect.ml.data import Scaling


class TrainingError(RuntimeError):
    """A classifier could not be fitted (singular covariance, non-finite loss, ...)."""


class Classifier:
    """Shared plumbing: optional z-scoring and class bookkeeping.

    Subclasses implement ``_fit(Z, y)`` and ``_predict(Z)`` on scaled
    features, plus ``_params()`` / ``_load(params)`` for persistence.
    """

    kind = None
    scaled = True

    def __init__(self):
        self.scaling = None
        self.classes_ = None

    def fit(self, X, y):
        X = np.ascontiguousarray(X, dtype=float)
        y = np.asarray(y, dtype=np.intp)
        if X.ndim != 2 or X.shape[0] != y.shape[0] or X.shape[0] < 1:
            raise ValueError("X must be (n, p) with n >= 1 and y of length n")
        self.scaling = Scaling.fit(X) if self.scaled else None
        self.classes_ = np.unique(y)
        self._fit(self._transform(X), y)
        return self

    def _transform(self, X):
        X = np.ascontiguousarray(np.atleast_2d(np.asarray(X, dtype=float)))
        return self.scaling.apply(X) if self.scaling is not None else X

    def predict(self, X) -> np.ndarray:
        self._check_fitted()
        return self._predict(self._transform(X))

    def _check_fitted(self):
        if self.classes_ is None:
            raise RuntimeError(f"{type(self).__name__} is not fitted")

    def hyperparameters(self) -> dict:
        return {}

    def to_dict(self) -> dict:
        self._check_fitted()
        return {
            "kind": self.kind,
            "hyperparameters": self.hyperparameters(),
            "classes": self.classes_.tolist(),
            "scaling": None if self.scaling is None else self.scaling.to_dict(),
            "params": self._params(),
        }

    @classmethod
    def from_dict(cls, d):
        model = cls(**d["hyperparameters"])
        model.classes_ = np.array(d["classes"], dtype=np.intp)
        model.scaling = None if d["scaling"] is None else Scaling.from_dict(d["scaling"])
        model._load(d["params"])
        return model


"""Linear discriminant analysis with a shared, ridge-stabilized covariance."""
import numpy as np

from slabselect.ml.base import Classifier, TrainingError

RIDGE = 1e-8


class LDAClassifier(Classifier):
    kind = "lda"

    def __init__(self, ridge: float = RIDGE):
        super().__init__()
        self.ridge = float(ridge)
        self.means = None
        self.covariance = None
        self.priors = None

    def hyperparameters(self):
        return {"ridge": self.ridge}

    def _fit(self, Z, y):
        classes = self.classes_
        n, p = Z.shape
        if classes.size < 2:
            raise TrainingError("LDA needs at least two classes")
        if n <= classes.size:
            raise TrainingError(f"LDA needs more samples ({n}) than classes ({classes.size})")
        means = np.array([Z[y == k].mean(axis=0) for k in classes])
        resid = Z - means[np.searchsorted(classes, y)]
        cov = resid.T @ resid / (n - classes.size)
        cov = cov + self.ridge * np.eye(p)
        priors = np.array([np.mean(y == k) for k in classes])
        self._set(means, cov, priors)

    def _set(self, means, cov, priors):
        try:
            chol = np.linalg.cholesky(cov)
        except np.linalg.LinAlgError:
            raise TrainingError("pooled covariance is singular after ridge") from None
        self.means = means
        self.covariance = cov
        self.priors = priors
        # coef[:, k] = inverse(cov) @ mean_k
        self._coef = np.linalg.solve(chol.T, np.linalg.solve(chol, means.T))
        self._intercept = -0.5 * np.einsum("kp,pk->k", means, self._coef) + np.log(priors)

    @classmethod
    def from_moments(cls, means, covariance, priors, classes):
        """Build a classifier directly from class means, shared covariance and priors."""
        model = cls()
        model.classes_ = np.asarray(classes, dtype=np.intp)
        model._set(np.asarray(means, dtype=float), np.asarray(covariance, dtype=float),
                   np.asarray(priors, dtype=float))
        return model

    def discriminants(self, X) -> np.ndarray:
        """Scores x' S^-1 m_k - m_k' S^-1 m_k / 2 + log(prior_k), one column per class."""
        self._check_fitted()
        return self._transform(X) @ self._coef + self._intercept

    def _predict(self, Z):
        scores = Z @ self._coef + self._intercept
        return self.classes_[np.argmax(scores, axis=1)]

    def _params(self):
        return {
            "means": self.means.tolist(),
            "covariance": self.covariance.tolist(),
            "priors": self.priors.tolist(),
        }

    def _load(self, params):
        self._set(np.array(params["means"]), np.array(params["covariance"]),
                  np.array(params["priors"]))

"""Single-hidden-layer perceptron: logistic hidden units, softmax output."""
import numpy as np

from slabselect.ml.base import Classifier, TrainingError


def _logistic(z):
    return 1.0 / (1.0 + np.exp(-z))


def softmax(z):
    z = z - z.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


class MLPClassifier(Classifier):
    kind = "mlp"

    def __init__(self, hidden_size: int = 5, learning_rate: float = 0.05, epochs: int = 2000,
                 seed: int = 0):
        super().__init__()
        if int(hidden_size) != hidden_size or hidden_size < 1:
            raise ValueError(f"hidden_size must be a positive integer, got {hidden_size}")
        if not learning_rate > 0:
            raise ValueError(f"learning_rate must be positive, got {learning_rate}")
        if int(epochs) != epochs or epochs < 0:
            raise ValueError(f"epochs must be a non-negative integer, got {epochs}")
        self.hidden_size = int(hidden_size)
        self.learning_rate = float(learning_rate)
        self.epochs = int(epochs)
        self.seed = int(seed)
        self.weights = None
        self.loss_history = []

    def hyperparameters(self):
        return {"hidden_size": self.hidden_size, "learning_rate": self.learning_rate,
                "epochs": self.epochs, "seed": self.seed}

    def init_weights(self, n_in, n_out):
        rng = np.random.default_rng(self.seed)
        h = self.hidden_size
        return {
            "W1": rng.uniform(-0.5, 0.5, (n_in, h)),
            "b1": rng.uniform(-0.5, 0.5, h),
            "W2": rng.uniform(-0.5, 0.5, (h, n_out)),
            "b2": rng.uniform(-0.5, 0.5, n_out),
        }

    @staticmethod
    def forward(weights, Z):
        hidden = _logistic(Z @ weights["W1"] + weights["b1"])
        return hidden, softmax(hidden @ weights["W2"] + weights["b2"])

    @classmethod
    def loss_and_gradient(cls, weights, Z, target):
        """Mean cross-entropy and its gradient; ``target`` holds output-column indices."""
        n = Z.shape[0]
        hidden, prob = cls.forward(weights, Z)
        rows = np.arange(n)
        loss = -np.mean(np.log(np.maximum(prob[rows, target], 1e-300)))
        d_out = prob.copy()
        d_out[rows, target] -= 1.0
        d_out /= n
        d_hidden = (d_out @ weights["W2"].T) * hidden * (1.0 - hidden)
        grad = {
            "W2": hidden.T @ d_out,
            "b2": d_out.sum(axis=0),
            "W1": Z.T @ d_hidden,
            "b1": d_hidden.sum(axis=0),
        }
        return loss, grad

    def _fit(self, Z, y):
        target = np.searchsorted(self.classes_, y)
        weights = self.init_weights(Z.shape[1], self.classes_.size)
        self.loss_history = []
        with np.errstate(over="ignore", invalid="ignore"):
            for epoch in range(self.epochs):
                loss, grad = self.loss_and_gradient(weights, Z, target)
                if not np.isfinite(loss):
                    raise TrainingError(f"non-finite loss at epoch {epoch}")
                self.loss_history.append(loss)
                for key in weights:
                    weights[key] = weights[key] - self.learning_rate * grad[key]
                if not all(np.all(np.isfinite(w)) for w in weights.values()):
                    raise TrainingError(f"non-finite weights after the update at epoch {epoch}")
        self.weights = weights

    def predict_proba(self, X) -> np.ndarray:
        """Softmax probabilities, one column per entry of ``classes_``."""
        self._check_fitted()
        return self.forward(self.weights, self._transform(X))[1]

    def _predict(self, Z):
        return self.classes_[np.argmax(self.forward(self.weights, Z)[1], axis=1)]

    def _params(self):
        return {k: v.tolist() for k, v in self.weights.items()}

    def _load(self, params):
        self.weights = {k: np.array(v, dtype=float) for k, v in params.items()}


def gradient_check(hidden_size: int = 5, n_samples: int = 5, n_features: int = 3, n_classes: int = 3,
                   seed: int = 0, step: float = 1e-5) -> float:
    """Largest relative gap between analytic and central-difference gradients.

    Uses a seeded random batch and the network's own seeded initialization.
    """
    rng = np.random.default_rng(seed)
    Z = rng.normal(size=(n_samples, n_features))
    target = rng.integers(0, n_classes, n_samples)
    weights = MLPClassifier(hidden_size=hidden_size, seed=seed).init_weights(n_features, n_classes)
    _, grad = MLPClassifier.loss_and_gradient(weights, Z, target)
    worst = 0.0
    for key, w in weights.items():
        for idx in np.ndindex(w.shape):
            orig = w[idx]
            w[idx] = orig + step
            up, _ = MLPClassifier.loss_and_gradient(weights, Z, target)
            w[idx] = orig - step
            down, _ = MLPClassifier.loss_and_gradient(weights, Z, target)
            w[idx] = orig
            fd = (up - down) / (2 * step)
            scale = max(abs(fd), abs(grad[key][idx]), 1e-8)
            worst = max(worst, abs(fd - grad[key][idx]) / scale)
    return worst

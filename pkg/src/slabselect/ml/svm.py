"""Soft-margin RBF support vector machines, one-vs-one, trained by SMO."""
import itertools
import logging

import numpy as np

from slabselect.ml.base import Classifier, TrainingError
from slabselect.ml.knn import squared_distances

log = logging.getLogger(__name__)

TAU = 1e-12


def rbf_kernel(A, B, gamma):
    return np.exp(-gamma * squared_distances(A, B))


def _pair_update(ai, aj, opposite, gi, gj, quad, C):
    # Clip case by case so that bounded variables land exactly on 0 or C;
    # clipping through a generic box leaves 1 - 1e-16 values that stall the solver.
    if opposite:
        delta = (-gi - gj) / quad
        diff = ai - aj
        ai += delta
        aj += delta
        if diff > 0:
            if aj < 0:
                aj, ai = 0.0, diff
        elif ai < 0:
            ai, aj = 0.0, -diff
        if diff > 0:
            if ai > C:
                ai, aj = C, C - diff
        elif aj > C:
            aj, ai = C, C + diff
    else:
        delta = (gi - gj) / quad
        total = ai + aj
        ai -= delta
        aj += delta
        if total > C:
            if ai > C:
                ai, aj = C, total - C
        elif aj < 0:
            aj, ai = 0.0, total
        if total > C:
            if aj > C:
                aj, ai = C, total - C
        elif ai < 0:
            ai, aj = 0.0, total
    return ai, aj


def smo(K, y, C, tol=1e-3, max_iter=None):
    """Solve the binary dual with kernel matrix ``K`` and labels in {-1, +1}.

    Working pairs are chosen with second-order information (maximal
    violating ``i``, best-gain ``j``).  Stops once the KKT violation
    m - M falls below ``tol``.  Returns ``(alpha, rho, iterations)``.
    """
    n = y.shape[0]
    y = y.astype(float)
    if max_iter is None:
        max_iter = max(10_000_000, 100 * n)
    alpha = np.zeros(n)
    grad = -np.ones(n)
    diag = np.diag(K).copy()
    it = 0
    while it < max_iter:
        yg = -y * grad
        up = ((y > 0) & (alpha < C)) | ((y < 0) & (alpha > 0))
        low = ((y > 0) & (alpha > 0)) | ((y < 0) & (alpha < C))
        if not up.any() or not low.any():
            break
        i = int(np.argmax(np.where(up, yg, -np.inf)))
        m_up = yg[i]
        m_low = np.min(np.where(low, yg, np.inf))
        if m_up - m_low < tol:
            break
        b = m_up - yg
        a = diag[i] + diag - 2.0 * K[i]
        a = np.where(a > 0, a, TAU)
        gain = np.where(low & (yg < m_up), -(b * b) / a, np.inf)
        j = int(np.argmin(gain))

        yi, yj = y[i], y[j]
        old_i, old_j = alpha[i], alpha[j]
        new_i, new_j = _pair_update(old_i, old_j, yi != yj, grad[i], grad[j], a[j], C)
        alpha[i], alpha[j] = new_i, new_j
        grad += y * (yi * (new_i - old_i) * K[:, i] + yj * (new_j - old_j) * K[:, j])
        it += 1
    else:
        log.warning("SMO stopped at the iteration cap (%d) before reaching tol=%g", max_iter, tol)

    ygrad = y * grad
    free = (alpha > 0) & (alpha < C)
    if free.any():
        rho = float(np.mean(ygrad[free]))
    else:
        at_c = alpha >= C
        at_0 = alpha <= 0
        ub_mask = (at_c & (y < 0)) | (at_0 & (y > 0))
        lb_mask = (at_c & (y > 0)) | (at_0 & (y < 0))
        ub = np.min(ygrad[ub_mask]) if ub_mask.any() else np.inf
        lb = np.max(ygrad[lb_mask]) if lb_mask.any() else -np.inf
        rho = float(0.5 * (ub + lb)) if np.isfinite(ub + lb) else 0.0
    return alpha, rho, it


class SVMClassifier(Classifier):
    kind = "svm"

    def __init__(self, C: float = 1.0, gamma: float = 1.0 / 3.0, tol: float = 1e-3):
        super().__init__()
        if not C > 0:
            raise ValueError(f"C must be positive, got {C}")
        if not gamma > 0:
            raise ValueError(f"gamma must be positive, got {gamma}")
        self.C = float(C)
        self.gamma = float(gamma)
        self.tol = float(tol)
        self.machines = []

    def hyperparameters(self):
        return {"C": self.C, "gamma": self.gamma, "tol": self.tol}

    def _fit(self, Z, y):
        if self.classes_.size < 2:
            raise TrainingError("SVM needs at least two classes")
        self.machines = []
        for a, b in itertools.combinations(self.classes_.tolist(), 2):
            mask = (y == a) | (y == b)
            Zp = Z[mask]
            yp = np.where(y[mask] == a, 1.0, -1.0)
            K = rbf_kernel(Zp, Zp, self.gamma)
            alpha, rho, _ = smo(K, yp, self.C, self.tol)
            sv = alpha > 0
            self.machines.append({
                "positive": a,
                "negative": b,
                "support": Zp[sv],
                "coef": (alpha * yp)[sv],
                "rho": rho,
            })

    def decision_values(self, X) -> np.ndarray:
        """One column per pairwise machine; positive favours the machine's first class."""
        self._check_fitted()
        return self._decisions(self._transform(X))

    def _decisions(self, Z):
        out = np.empty((Z.shape[0], len(self.machines)))
        for col, mach in enumerate(self.machines):
            out[:, col] = rbf_kernel(Z, mach["support"], self.gamma) @ mach["coef"] - mach["rho"]
        return out

    def _vote(self, values):
        votes = np.zeros((values.shape[0], int(self.classes_.max()) + 1), dtype=np.intp)
        rows = np.arange(values.shape[0])
        for col, mach in enumerate(self.machines):
            winner = np.where(values[:, col] > 0, mach["positive"], mach["negative"])
            np.add.at(votes, (rows, winner), 1)
        # ties go to the lowest class code, i.e. alphabetical solver name
        return np.argmax(votes, axis=1)

    def _predict(self, Z):
        return self._vote(self._decisions(Z))

    def _params(self):
        return {"machines": [
            {
                "positive": m["positive"],
                "negative": m["negative"],
                "support": m["support"].tolist(),
                "coef": m["coef"].tolist(),
                "rho": m["rho"],
            }
            for m in self.machines
        ]}

    def _load(self, params):
        self.machines = [
            {
                "positive": int(m["positive"]),
                "negative": int(m["negative"]),
                "support": np.array(m["support"], dtype=float).reshape(-1, len(self.scaling.mean)),
                "coef": np.array(m["coef"], dtype=float),
                "rho": float(m["rho"]),
            }
            for m in params["machines"]
        ]

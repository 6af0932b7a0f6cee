"""CART classification trees grown on Gini impurity."""
from dataclasses import dataclass

import numpy as np

from slabselect import CLASSES, FEATURES
from slabselect._backend import kernels


def gini(counts) -> float:
    """1 - sum(p_k^2) for a vector of class counts (0 for an empty node)."""
    counts = np.asarray(counts, dtype=float)
    total = counts.sum()
    if total == 0:
        return 0.0
    p = counts / total
    return float(1.0 - np.sum(p * p))


@dataclass(eq=False)
class DecisionTree:
    """Flat node arrays; ``feature[i] == -1`` marks a leaf.

    Rows with ``x[feature] <= threshold`` go to ``left``.  ``decrease[i]``
    is n*Gini(node) - n_l*Gini(left) - n_r*Gini(right) for split nodes.
    """

    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    counts: np.ndarray
    decrease: np.ndarray

    @property
    def n_nodes(self) -> int:
        return int(self.feature.shape[0])

    @property
    def is_leaf(self) -> np.ndarray:
        return self.feature < 0

    def apply(self, X) -> np.ndarray:
        X = np.ascontiguousarray(np.atleast_2d(X), dtype=float)
        return kernels.apply_tree(X, self.feature, self.threshold, self.left, self.right)

    def predict(self, X) -> np.ndarray:
        # leaf majority; ties to the lowest class code
        return np.argmax(self.counts[self.apply(X)], axis=1)

    def feature_importance(self, n_features: int) -> np.ndarray:
        out = np.zeros(n_features)
        split = ~self.is_leaf
        np.add.at(out, self.feature[split], self.decrease[split])
        return out

    def to_dict(self):
        return {
            "feature": self.feature.tolist(),
            "threshold": self.threshold.tolist(),
            "left": self.left.tolist(),
            "right": self.right.tolist(),
            "counts": self.counts.tolist(),
            "decrease": self.decrease.tolist(),
        }

    @classmethod
    def from_dict(cls, d):
        n_cls = len(CLASSES)
        return cls(
            np.array(d["feature"], dtype=np.intp),
            np.array(d["threshold"], dtype=float),
            np.array(d["left"], dtype=np.intp),
            np.array(d["right"], dtype=np.intp),
            np.array(d["counts"], dtype=np.intp).reshape(-1, n_cls),
            np.array(d["decrease"], dtype=float),
        )

    def export_text(self, feature_names=FEATURES, class_names=CLASSES, max_depth: int = 3) -> str:
        """Indented rules with majority class, class shares and sample share per node."""
        total = self.counts[0].sum()
        lines = []

        def visit(node, depth, prefix):
            c = self.counts[node]
            n = c.sum()
            shares = " ".join(f"{name}={v / n:.2f}" for name, v in zip(class_names, c))
            major = class_names[int(np.argmax(c))]
            head = f"{'  ' * depth}{prefix}[{major}] {shares} ({100.0 * n / total:.1f}% of sample)"
            if self.feature[node] < 0:
                lines.append(head + " leaf")
                return
            rule = f"{feature_names[self.feature[node]]} <= {self.threshold[node]:.6g}"
            if depth >= max_depth:
                lines.append(head + f" split: {rule} ...")
                return
            lines.append(head + f" split: {rule}")
            visit(self.left[node], depth + 1, "yes: ")
            visit(self.right[node], depth + 1, "no:  ")

        visit(0, 0, "")
        return "\n".join(lines) + "\n"


def grow(X, y, sample=None, feature_subset_size=None, min_leaf=1, rng=None, keys=None) -> DecisionTree:
    """Grow one tree on ``X[sample]``.

    At each node the features that are not constant there are ordered by
    random keys and the first ``feature_subset_size`` are searched for the
    threshold (midpoint between consecutive distinct values) minimizing the
    children's weighted Gini impurity.  Growth stops at pure nodes, nodes
    smaller than ``2 * min_leaf``, or when no split lowers impurity.
    """
    X = np.ascontiguousarray(X, dtype=float)
    y = np.ascontiguousarray(y, dtype=np.intp)
    n, p = X.shape
    sample = np.arange(n, dtype=np.intp) if sample is None else np.ascontiguousarray(sample, dtype=np.intp)
    mtry = p if feature_subset_size is None else int(feature_subset_size)
    if mtry < 1:
        raise ValueError(f"feature_subset_size must be >= 1, got {mtry}")
    if int(min_leaf) != min_leaf or min_leaf < 1:
        raise ValueError(f"min_leaf must be a positive integer, got {min_leaf}")
    if keys is None:
        rng = np.random.default_rng(0) if rng is None else rng
        keys = rng.random((max(2 * sample.shape[0] - 1, 1), p))
    keys = np.ascontiguousarray(keys, dtype=float)
    arrays = kernels.grow_tree(X, y, sample, len(CLASSES), mtry, int(min_leaf), keys)
    return DecisionTree(*(np.asarray(a) for a in arrays))

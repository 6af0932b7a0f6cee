"""From-scratch classifiers over (sn_order, num_cells, scattering_ratio)."""
from slabselect.ml.base import Classifier, TrainingError
from slabselect.ml.data import LabeledDataset, Scaling, decode_labels, encode_labels, standardize
from slabselect.ml.forest import RandomForestClassifier, gini_importance
from slabselect.ml.knn import KNNClassifier
from slabselect.ml.lda import LDAClassifier
from slabselect.ml.mlp import MLPClassifier
from slabselect.ml.persist import MODEL_TYPES, ModelFormatError, load_model, save_model
from slabselect.ml.svm import SVMClassifier
from slabselect.ml.tree import DecisionTree, gini, grow

KINDS = ("lda", "knn", "svm", "mlp", "rf")


def make_model(kind: str, **hyperparameters) -> Classifier:
    """Untrained classifier of ``kind`` with the given hyperparameters."""
    try:
        cls = MODEL_TYPES[kind]
    except KeyError:
        raise ValueError(f"unknown model kind {kind!r}; choose from {', '.join(KINDS)}") from None
    return cls(**hyperparameters)


def train(kind: str, dataset: LabeledDataset, **hyperparameters) -> Classifier:
    return make_model(kind, **hyperparameters).fit(dataset.features, dataset.labels)


__all__ = [
    "KINDS", "Classifier", "DecisionTree", "KNNClassifier", "LDAClassifier", "LabeledDataset",
    "MLPClassifier", "ModelFormatError", "RandomForestClassifier", "SVMClassifier", "Scaling",
    "TrainingError", "decode_labels", "encode_labels", "gini", "gini_importance", "grow",
    "load_model", "make_model", "save_model", "standardize", "train",
]

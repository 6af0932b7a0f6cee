"""Single-file JSON model format.

Layout: ``{"format": "slabselect-model", "version": 1, "kind": ...,
"hyperparameters": {...}, "classes": [...], "scaling": {...} | null,
"params": {...}, "metadata": {...}}``.  Floats are written with Python's
shortest round-trip repr, so loading reproduces every parameter exactly.
"""
import json

from slabselect.ml.forest import RandomForestClassifier
from slabselect.ml.knn import KNNClassifier
from slabselect.ml.lda import LDAClassifier
from slabselect.ml.mlp import MLPClassifier
from slabselect.ml.svm import SVMClassifier

FORMAT = "slabselect-model"
VERSION = 1

MODEL_TYPES = {
    cls.kind: cls
    for cls in (LDAClassifier, KNNClassifier, SVMClassifier, MLPClassifier, RandomForestClassifier)
}


class ModelFormatError(ValueError):
    """A model file is not a readable slabselect model."""


def dumps(model, metadata=None) -> str:
    doc = {"format": FORMAT, "version": VERSION}
    doc.update(model.to_dict())
    doc["metadata"] = dict(metadata or {})
    return json.dumps(doc, sort_keys=True, separators=(",", ":")) + "\n"


def loads(text: str):
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ModelFormatError(f"not JSON: {exc}") from None
    if not isinstance(doc, dict) or doc.get("format") != FORMAT:
        raise ModelFormatError("missing slabselect-model header")
    if doc.get("version") != VERSION:
        raise ModelFormatError(f"unsupported model version {doc.get('version')!r}")
    try:
        cls = MODEL_TYPES[doc["kind"]]
    except KeyError:
        raise ModelFormatError(f"unknown model kind {doc.get('kind')!r}") from None
    try:
        return cls.from_dict(doc), doc.get("metadata", {})
    except (KeyError, TypeError, ValueError) as exc:
        raise ModelFormatError(f"corrupt {doc['kind']} parameters: {exc}") from None


def save_model(model, path, metadata=None) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(dumps(model, metadata))


def load_model(path):
    """Return ``(model, metadata)``."""
    with open(path, encoding="utf-8") as fh:
        return loads(fh.read())

"""Repeated stratified k-fold cross-validation, accuracy, Cohen's kappa and model ranking."""
import csv
import json
import time
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

from slabselect import CLASSES


def _paired(truth, predicted):
    truth = np.asarray(truth)
    predicted = np.asarray(predicted)
    if truth.shape != predicted.shape or truth.ndim != 1:
        raise ValueError(f"label vectors must be 1-D and equal length, got {truth.shape} and {predicted.shape}")
    if truth.size == 0:
        raise ValueError("label vectors are empty")
    return truth, predicted


def accuracy(truth, predicted) -> float:
    truth, predicted = _paired(truth, predicted)
    return float(np.mean(truth == predicted))


def cohen_kappa(truth, predicted) -> float:
    """Agreement corrected for chance: (p_a - p_e) / (1 - p_e).

    When both sides use one and the same single class, p_e = 1 and the
    ratio is undefined; 1 is returned for full agreement and 0 otherwise.
    """
    truth, predicted = _paired(truth, predicted)
    n = truth.size
    p_a = float(np.count_nonzero(truth == predicted)) / n
    labels = np.union1d(truth, predicted)
    p_e = 0.0
    for lab in labels:
        p_e += (np.count_nonzero(truth == lab) / n) * (np.count_nonzero(predicted == lab) / n)
    if p_e >= 1.0:
        return 1.0 if p_a == 1.0 else 0.0
    return (p_a - p_e) / (1.0 - p_e)


def confusion_matrix(truth, predicted, n_classes: int = len(CLASSES)) -> np.ndarray:
    """Counts with rows = truth and columns = prediction (integer class codes)."""
    truth, predicted = _paired(truth, predicted)
    out = np.zeros((n_classes, n_classes), dtype=np.int64)
    np.add.at(out, (truth.astype(np.intp), predicted.astype(np.intp)), 1)
    return out


def kappa_from_confusion(confusion) -> float:
    c = np.asarray(confusion, dtype=float)
    n = c.sum()
    p_a = np.trace(c) / n
    p_e = float(np.sum(c.sum(axis=1) * c.sum(axis=0))) / (n * n)
    if p_e >= 1.0:
        return 1.0 if p_a == 1.0 else 0.0
    return float((p_a - p_e) / (1.0 - p_e))


def precision_per_class(confusion) -> np.ndarray:
    c = np.asarray(confusion, dtype=float)
    cols = c.sum(axis=0)
    return np.divide(np.diag(c), cols, out=np.zeros_like(cols), where=cols > 0)


@dataclass(frozen=True)
class CVConfig:
    folds: int = 4
    repeats: int = 25
    seed: int = 0

    def __post_init__(self):
        if int(self.folds) != self.folds or self.folds < 2:
            raise ValueError(f"folds must be an integer >= 2, got {self.folds}")
        if int(self.repeats) != self.repeats or self.repeats < 1:
            raise ValueError(f"repeats must be an integer >= 1, got {self.repeats}")


class StratificationError(ValueError):
    pass


def stratified_folds(labels, folds: int, rng) -> np.ndarray:
    """Fold index per row: shuffle each class, then deal its rows round-robin.

    The dealing position carries over from one class to the next so fold
    sizes stay within one of each other overall as well as per class.
    """
    labels = np.asarray(labels)
    out = np.empty(labels.shape[0], dtype=np.intp)
    offset = 0
    for cls in np.unique(labels):
        members = np.flatnonzero(labels == cls)
        if members.size < folds:
            name = CLASSES[int(cls)] if 0 <= int(cls) < len(CLASSES) else cls
            raise StratificationError(
                f"class {name!r} has {members.size} rows, fewer than the {folds} folds requested")
        members = members[rng.permutation(members.size)]
        out[members] = (offset + np.arange(members.size)) % folds
        offset = (offset + members.size) % folds
    return out


@dataclass
class FoldResult:
    repeat: int
    fold: int
    n_test: int
    accuracy: float
    kappa: float
    seconds: float
    test_index: Optional[np.ndarray] = field(default=None, repr=False)
    predicted: Optional[np.ndarray] = field(default=None, repr=False)


@dataclass
class EvalReport:
    model: str
    config: CVConfig
    hyperparameters: dict
    accuracy_mean: float
    accuracy_sd: float
    kappa_mean: float
    kappa_sd: float
    confusion: np.ndarray
    per_class_precision: np.ndarray
    modeling_seconds: float
    folds: List[FoldResult] = field(default_factory=list)
    label: Optional[str] = None

    @property
    def pooled_accuracy(self) -> float:
        return float(np.trace(self.confusion) / self.confusion.sum())

    def to_dict(self, timing: bool = True) -> dict:
        d = {
            "model": self.model,
            "label": self.label,
            "config": {"folds": self.config.folds, "repeats": self.config.repeats, "seed": self.config.seed},
            "hyperparameters": self.hyperparameters,
            "accuracy_mean": self.accuracy_mean,
            "accuracy_sd": self.accuracy_sd,
            "kappa_mean": self.kappa_mean,
            "kappa_sd": self.kappa_sd,
            "classes": list(CLASSES),
            "confusion": self.confusion.tolist(),
            "per_class_precision": self.per_class_precision.tolist(),
        }
        if timing:
            d["modeling_seconds"] = self.modeling_seconds
        return d


def repeated_stratified_kfold(dataset, model_factory, cv: CVConfig = CVConfig(), kind=None,
                              label=None, keep_predictions: bool = False) -> EvalReport:
    """Train and score ``model_factory()`` on every fold of every repeat.

    Each repeat draws its partition from its own generator spawned from
    ``cv.seed``, so a given (seed, repeat) always yields the same folds.
    With ``keep_predictions`` every fold keeps its test rows and predictions.
    """
    X, y = dataset.features, dataset.labels
    streams = np.random.SeedSequence(cv.seed).spawn(cv.repeats)
    confusion = np.zeros((len(CLASSES), len(CLASSES)), dtype=np.int64)
    results = []
    hyper = {}
    for r, ss in enumerate(streams):
        assignment = stratified_folds(y, cv.folds, np.random.default_rng(ss))
        for f in range(cv.folds):
            test = assignment == f
            t0 = time.perf_counter()
            model = model_factory()
            model.fit(X[~test], y[~test])
            pred = model.predict(X[test])
            seconds = time.perf_counter() - t0
            hyper = model.hyperparameters()
            kind = kind or model.kind
            confusion += confusion_matrix(y[test], pred)
            fold = FoldResult(r, f, int(test.sum()), accuracy(y[test], pred),
                              cohen_kappa(y[test], pred), seconds)
            if keep_predictions:
                fold.test_index = np.flatnonzero(test)
                fold.predicted = np.asarray(pred)
            results.append(fold)
    acc = np.array([fr.accuracy for fr in results])
    kap = np.array([fr.kappa for fr in results])
    sd = (lambda v: float(np.std(v, ddof=1))) if len(results) > 1 else (lambda v: 0.0)
    return EvalReport(
        model=kind,
        config=cv,
        hyperparameters=hyper,
        accuracy_mean=float(acc.mean()),
        accuracy_sd=sd(acc),
        kappa_mean=float(kap.mean()),
        kappa_sd=sd(kap),
        confusion=confusion,
        per_class_precision=precision_per_class(confusion),
        modeling_seconds=float(sum(fr.seconds for fr in results)),
        folds=results,
        label=label,
    )


def rank_models(reports) -> list:
    """Best first: accuracy, then kappa (both descending), then model name."""
    return sorted(reports, key=lambda r: (-r.accuracy_mean, -r.kappa_mean, r.model))


def write_report_json(reports, path, timing: bool = True):
    payload = {"reports": [r.to_dict(timing=timing) for r in reports]}
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def write_folds_csv(reports, path, timing: bool = True):
    cols = ["model", "repeat", "fold", "n_test", "accuracy", "kappa"] + (["seconds"] if timing else [])
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(cols)
        for rep in reports:
            for fr in rep.folds:
                row = [rep.model, fr.repeat, fr.fold, fr.n_test, f"{fr.accuracy:.17g}", f"{fr.kappa:.17g}"]
                if timing:
                    row.append(f"{fr.seconds:.6f}")
                w.writerow(row)


def format_table(reports) -> str:
    lines = [f"{'rank':>4}  {'model':<6} {'accuracy':>17} {'kappa':>17} {'seconds':>9}"]
    for i, r in enumerate(reports, 1):
        lines.append(f"{i:>4}  {r.model:<6} {r.accuracy_mean:.3f} ({r.accuracy_sd:.3f})"
                     f"   {r.kappa_mean:.3f} ({r.kappa_sd:.3f})   {r.modeling_seconds:9.2f}")
    return "\n".join(lines) + "\n"

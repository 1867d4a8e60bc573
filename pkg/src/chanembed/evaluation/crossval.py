"""Repeated stratified k-fold cross-validation."""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np
from joblib import Parallel, delayed

from ..errors import StratificationError
from .classifiers import make_classifier


@dataclass
class CvReport:
    classifier: str
    classes: list
    accuracies: np.ndarray  # repeats x folds
    confusion: np.ndarray  # true x predicted, summed over every fold

    @property
    def mean(self) -> float:
        return float(np.mean(self.accuracies))

    @property
    def std(self) -> float:
        return float(np.std(self.accuracies))

    def to_dict(self) -> dict:
        return {
            "classifier": self.classifier,
            "classes": [str(c) for c in self.classes],
            "mean_accuracy": self.mean,
            "std_accuracy": self.std,
            "accuracies": self.accuracies.tolist(),
            "confusion": self.confusion.tolist(),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"


def stratified_folds(codes, folds: int, rng) -> np.ndarray:
    """Fold id per observation; each class is shuffled and dealt round-robin.

    The dealing offset carries over between classes so fold sizes differ by
    at most one overall.
    """
    codes = np.asarray(codes)
    fold_of = np.empty(codes.size, dtype=np.intp)
    offset = 0
    for c in np.unique(codes):
        members = np.flatnonzero(codes == c)
        if members.size < folds:
            raise StratificationError(f"class {c} has {members.size} members, fewer than {folds} folds")
        members = rng.permutation(members)
        fold_of[members] = (offset + np.arange(members.size)) % folds
        offset += members.size
    return fold_of


def _fold_seed(seed, repeat, fold):
    return int(np.random.SeedSequence([seed, repeat, fold]).generate_state(1)[0])


def _run_fold(name, params, X, codes, test, seed):
    clf = make_classifier(name, seed=seed, **params)
    clf.fit(X[~test], codes[~test])
    return clf.predict(X[test])


def repeated_kfold(points, labels, classifier: str = "knn", *, folds: int = 10, repeats: int = 10,
                   seed: int = 0, n_jobs: int = 1, classifier_params: dict | None = None) -> CvReport:
    """Accuracy of ``classifier`` over ``repeats`` reshuffled stratified ``folds``-fold splits.

    Each repeat draws its shuffle from its own seeded stream, and each fold's
    classifier (bagging only) gets a seed derived from ``(seed, repeat, fold)``,
    so results do not depend on ``n_jobs``.
    """
    X = np.asarray(points, dtype=np.float64)
    X = X[:, None] if X.ndim == 1 else X
    classes, codes = np.unique(np.asarray(labels), return_inverse=True)
    codes = codes.reshape(-1)
    params = dict(classifier_params or {})

    splits = []
    for r in range(repeats):
        rng = np.random.default_rng(np.random.SeedSequence([seed, r]))
        fold_of = stratified_folds(codes, folds, rng)
        for f in range(folds):
            splits.append((r, f, fold_of == f))

    preds = Parallel(n_jobs=n_jobs)(
        delayed(_run_fold)(classifier, params, X, codes, test, _fold_seed(seed, r, f))
        for r, f, test in splits
    )
    acc = np.empty((repeats, folds))
    confusion = np.zeros((classes.size, classes.size), dtype=np.int64)
    for (r, f, test), pred in zip(splits, preds):
        truth = codes[test]
        acc[r, f] = np.mean(pred == truth)
        np.add.at(confusion, (truth, pred), 1)
    return CvReport(classifier=classifier, classes=classes.tolist(), accuracies=acc, confusion=confusion)

"""Feature-weighted KNN with inverse-distance voting, and stratified k-fold cross-validation
that fits the whole selection stage on training folds only."""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .selection import (
    PideConfig, Standardizer, cide_weights, lda_fit, pca_fit, pide_weights,
)

DELTA = 1e-12
METHODS = ("pide", "cide", "pca", "lda", "none")


@dataclass(frozen=True)
class WknnModel:
    train_x: np.ndarray  # standardized, selected columns only
    train_y: np.ndarray
    w: np.ndarray
    k: int
    scaler: Standardizer
    classes: np.ndarray

    def to_json(self, feature_names=None) -> str:
        return json.dumps({
            "kind": "wknn",
            "feature_names": list(feature_names) if feature_names is not None else None,
            "k": self.k,
            "weights": self.w.tolist(),
            "standardization": {"mean": self.scaler.mean.tolist(), "std": self.scaler.std.tolist(),
                                "constant": self.scaler.constant.tolist()},
            "classes": self.classes.tolist(),
            "train_y": self.train_y.tolist(),
            "train_x": self.train_x.tolist(),
        }, indent=1)

    @classmethod
    def from_json(cls, text):
        d = json.loads(text)
        st = d["standardization"]
        scaler = Standardizer(np.array(st["mean"]), np.array(st["std"]), np.array(st["constant"], dtype=bool))
        return cls(np.array(d["train_x"], dtype=float).reshape(len(d["train_y"]), -1),
                   np.array(d["train_y"], dtype=int), np.array(d["weights"], dtype=float),
                   int(d["k"]), scaler, np.array(d["classes"], dtype=int))


@dataclass(frozen=True)
class Prediction:
    label: int
    scores: np.ndarray  # aligned with the model's sorted class ids


def wknn_fit(X, y, weights, k: int = 2, standardize: bool = True) -> WknnModel:
    """Lazy learner: standardizes the training rows and keeps them with the feature weights.

    Pass standardize=False for inputs that already live in standardized units (projection scores).
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=int)
    w = np.asarray(weights, dtype=float)
    if X.ndim != 2 or X.shape[1] == 0:
        raise ValueError("empty selected-feature set")
    if y.shape != (X.shape[0],):
        raise ValueError(f"{y.size} labels for {X.shape[0]} rows")
    if w.shape != (X.shape[1],):
        raise ValueError(f"{w.size} weights for {X.shape[1]} features")
    if np.any(w < 0) or not np.any(w > 0):
        raise ValueError("weights must be non-negative with at least one positive entry")
    if not 1 <= k <= X.shape[0]:
        raise ValueError(f"k={k} must be in [1, {X.shape[0]}] (training rows)")
    scaler = Standardizer.fit(X) if standardize else Standardizer.identity(X.shape[1])
    return WknnModel(scaler.transform(X), y, w, k, scaler, np.unique(y))


def weighted_distances(model: WknnModel, Q):
    """h[q, i] = sqrt(sum_j w_j (Q_qj - Y_ij)^2) on standardized coordinates."""
    Z = model.scaler.transform(np.atleast_2d(Q))
    diff = Z[:, None, :] - model.train_x[None, :, :]
    return np.sqrt(np.einsum("qij,j->qi", diff * diff, model.w))


def wknn_predict_many(model: WknnModel, Q):
    """(labels, scores) for a batch of query rows."""
    Q = np.atleast_2d(np.asarray(Q, dtype=float))
    if Q.shape[1] != model.train_x.shape[1]:
        raise ValueError(f"query has {Q.shape[1]} features, model expects {model.train_x.shape[1]}")
    h = weighted_distances(model, Q)
    nn = np.argsort(h, axis=1, kind="stable")[:, :model.k]
    hk = np.take_along_axis(h, nn, axis=1)
    votes = 1.0 / (hk + DELTA)
    onehot = model.train_y[nn][:, :, None] == model.classes[None, None, :]
    mass = np.einsum("qk,qkc->qc", votes, onehot)
    scores = mass / mass.sum(axis=1, keepdims=True)
    # argmax returns the first maximum, i.e. the smallest class id on exact ties
    labels = model.classes[np.argmax(scores, axis=1)]
    return labels, scores


def wknn_predict(model: WknnModel, x) -> Prediction:
    x = np.asarray(x, dtype=float)
    if x.ndim != 1:
        raise ValueError("wknn_predict takes a single feature vector")
    labels, scores = wknn_predict_many(model, x[None, :])
    return Prediction(int(labels[0]), scores[0])


@dataclass
class SelectionConfig:
    method: str = "pide"
    threshold: float = 0.92
    smoothing_window: int = 5
    normalizer_mode: str = "std"
    d: Optional[int] = None

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"unknown selection method {self.method!r}; expected one of {METHODS}")


@dataclass
class PipelineStages:
    """Selection + classifier parameters as consumed by cross_validate."""
    selection: SelectionConfig = field(default_factory=SelectionConfig)
    k: int = 2


@dataclass
class FittedPipeline:
    scaler: Standardizer
    method: str
    weights: Optional[object]  # FeatureWeights for pide/cide
    projection: Optional[object]  # LinearProjection for pca/lda
    columns: np.ndarray  # selected raw-feature columns (pide/cide/none)
    model: WknnModel

    def represent(self, X):
        """Map raw feature rows to the classifier's input space (it standardizes on its own)."""
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if self.projection is not None:
            return self.projection.transform(self.scaler.transform(X))
        return X[:, self.columns]

    def predict(self, X):
        return wknn_predict_many(self.model, self.represent(X))


def fit_pipeline(X, y, stages: PipelineStages) -> FittedPipeline:
    """Standardize -> weight/select or project -> weighted KNN, using only the rows given."""
    sel = stages.selection
    scaler = Standardizer.fit(X)
    Z = scaler.transform(X)
    weights = projection = None
    if sel.method in ("pide", "cide"):
        if sel.method == "pide":
            weights = pide_weights(Z, y, PideConfig(sel.threshold, sel.smoothing_window, sel.normalizer_mode))
        else:
            weights = cide_weights(Z, y, sel.threshold)
        columns = weights.selected
        if columns.size == 0:
            raise ValueError(f"threshold {sel.threshold} selects no features")
        # only PIDE feeds its weights into the distance; the CIDE baseline is an unweighted KNN
        w = weights.w[columns] if sel.method == "pide" else np.ones(columns.size)
        # raw columns: the classifier's own standardization reproduces Z[:, columns]
        R = np.asarray(X, dtype=float)[:, columns]
    elif sel.method in ("pca", "lda"):
        projection = pca_fit(Z, sel.d) if sel.method == "pca" else lda_fit(Z, y, sel.d)
        columns = np.arange(0)
        R = projection.transform(Z)
        w = np.ones(R.shape[1])
    else:
        columns = np.arange(Z.shape[1])
        R = np.asarray(X, dtype=float)
        w = np.ones(R.shape[1])
    # projection scores keep their scale: re-standardizing would blow weak components up to unit variance
    model = wknn_fit(R, y, w, stages.k, standardize=projection is None)
    return FittedPipeline(scaler, sel.method, weights, projection, columns, model)


def stratified_folds(y, folds: int = 5, seed: int = 0) -> np.ndarray:
    """Fold id per row: seeded shuffle within each class, then round-robin deal."""
    y = np.asarray(y)
    fold_of = np.empty(y.size, dtype=int)
    rng = np.random.default_rng(seed)
    offset = 0
    for c in np.unique(y):
        idx = np.flatnonzero(y == c)
        if idx.size < folds:
            raise ValueError(f"class {c} has {idx.size} samples, fewer than {folds} folds")
        idx = rng.permutation(idx)
        # rotate the deal start so fold sizes stay balanced overall, not only per class
        fold_of[idx] = (np.arange(idx.size) + offset) % folds
        offset += idx.size
    return fold_of


@dataclass
class CVResult:
    fold_of: np.ndarray
    accuracies: np.ndarray
    predictions: np.ndarray  # out-of-fold labels, row-aligned
    scores: np.ndarray  # out-of-fold class scores, row-aligned
    classes: np.ndarray
    fold_weights: list
    fold_selected_counts: list

    @property
    def mean(self):
        return float(self.accuracies.mean())

    @property
    def std(self):
        return float(self.accuracies.std(ddof=1)) if self.accuracies.size > 1 else 0.0


def cross_validate(X, y, stages: PipelineStages = PipelineStages(), folds: int = 5, seed: int = 0,
                   fold_indices: Optional[Sequence[int]] = None) -> CVResult:
    """Stratified k-fold CV; every fitted statistic comes from the training folds alone.

    `fold_indices` restricts evaluation to a subset of folds (others are left as NaN / -1).
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=int)
    fold_of = stratified_folds(y, folds, seed)
    classes = np.unique(y)
    preds = np.full(y.size, -1)
    scores = np.full((y.size, classes.size), np.nan)
    accs = np.full(folds, np.nan)
    fold_weights, counts = [None] * folds, [0] * folds
    for f in range(folds) if fold_indices is None else fold_indices:
        test = fold_of == f
        fitted = fit_pipeline(X[~test], y[~test], stages)
        lab, sc = fitted.predict(X[test])
        preds[test] = lab
        cols = np.searchsorted(classes, fitted.model.classes)
        block = np.zeros((lab.size, classes.size))
        block[:, cols] = sc
        scores[test] = block
        accs[f] = np.mean(lab == y[test])
        fold_weights[f] = fitted.weights
        counts[f] = int(fitted.columns.size if fitted.projection is None else fitted.projection.basis.shape[1])
    return CVResult(fold_of, accs, preds, scores, classes, fold_weights, counts)

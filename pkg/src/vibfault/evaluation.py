"""Metrics, noise injection, the robustness and threshold experiments, and rank-based tests."""
from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Optional, Sequence

import numpy as np
from scipy import stats

from .classify import PipelineStages, SelectionConfig, cross_validate
from .selection import (
    PideConfig, cide_weights, class_robustness, lda_fit, pca_fit, pide_weights, standardize,
)

ROBUSTNESS_METHODS = ("pide", "cide", "pca", "lda")


@dataclass(frozen=True)
class ConfusionMatrix:
    counts: np.ndarray  # rows = true class, cols = predicted
    classes: np.ndarray

    @property
    def total(self):
        return int(self.counts.sum())

    def one_vs_rest(self, c):
        """(TP, FP, TN, FN) for class id c."""
        i = int(np.flatnonzero(self.classes == c)[0])
        tp = self.counts[i, i]
        fp = self.counts[:, i].sum() - tp
        fn = self.counts[i, :].sum() - tp
        return int(tp), int(fp), int(self.total - tp - fp - fn), int(fn)


def confusion(y_true, y_pred, classes=None) -> ConfusionMatrix:
    y_true = np.asarray(y_true, dtype=int)
    y_pred = np.asarray(y_pred, dtype=int)
    if y_true.size == 0 or y_true.shape != y_pred.shape:
        raise ValueError("confusion needs two non-empty label vectors of equal length")
    classes = np.unique(y_true) if classes is None else np.asarray(classes, dtype=int)
    unknown = np.setdiff1d(np.union1d(y_true, y_pred), classes)
    if unknown.size:
        raise ValueError(f"labels {unknown.tolist()} are not in the class set {classes.tolist()}")
    ti = np.searchsorted(classes, y_true)
    pi = np.searchsorted(classes, y_pred)
    counts = np.zeros((classes.size, classes.size), dtype=int)
    np.add.at(counts, (ti, pi), 1)
    return ConfusionMatrix(counts, classes)


def accuracy(cm: ConfusionMatrix) -> float:
    return float(np.trace(cm.counts) / cm.total)


def auc_binary(score, positive) -> float:
    """Mann-Whitney AUC with ties counted as 1/2; NaN when a side is empty."""
    score = np.asarray(score, dtype=float)
    positive = np.asarray(positive, dtype=bool)
    n_pos = int(positive.sum())
    n_neg = positive.size - n_pos
    if n_pos == 0 or n_neg == 0:
        return math.nan
    ranks = stats.rankdata(score)
    return float((ranks[positive].sum() - n_pos * (n_pos + 1) / 2) / (n_pos * n_neg))


@dataclass(frozen=True)
class AucReport:
    classes: np.ndarray
    per_class: np.ndarray  # NaN where undefined
    macro: float

    @property
    def undefined(self):
        return self.classes[np.isnan(self.per_class)]


def roc_auc_ovr(scores, y_true, classes=None) -> AucReport:
    """One-vs-rest AUC per class (score column c ranks class c against the rest) and macro mean."""
    scores = np.asarray(scores, dtype=float)
    y_true = np.asarray(y_true, dtype=int)
    classes = np.unique(y_true) if classes is None else np.asarray(classes, dtype=int)
    if scores.shape != (y_true.size, classes.size):
        raise ValueError(f"scores shape {scores.shape} does not match {y_true.size} samples x {classes.size} classes")
    per = np.array([auc_binary(scores[:, i], y_true == c) for i, c in enumerate(classes)])
    ok = ~np.isnan(per)
    return AucReport(classes, per, float(per[ok].mean()) if ok.any() else math.nan)


@dataclass(frozen=True)
class NoiseSpec:
    instance_ratio: float
    feature_ratio: float
    seed: int = 0

    def __post_init__(self):
        for r in (self.instance_ratio, self.feature_ratio):
            if not 0 <= r <= 1:
                raise ValueError(f"noise ratios must lie in [0, 1], got {r}")


def inject_noise(X, spec: NoiseSpec):
    """Overwrite a random ceil(ri*N) x ceil(rf*J) block of cells with U[mu - 2 sd, mu + 2 sd] draws,
    mu and sd (N-1) taken from each chosen column before injection.

    Returns (noisy copy, touched) where touched is a (rows, cols) pair of index arrays.
    """
    X = np.asarray(X, dtype=float)
    n, J = X.shape
    rng = np.random.default_rng(spec.seed)
    rows = np.sort(rng.choice(n, size=math.ceil(spec.instance_ratio * n), replace=False))
    cols = np.sort(rng.choice(J, size=math.ceil(spec.feature_ratio * J), replace=False))
    out = X.copy()
    if rows.size and cols.size:
        mu = X[:, cols].mean(axis=0)
        sd = X[:, cols].std(axis=0, ddof=1) if n > 1 else np.zeros(cols.size)
        out[np.ix_(rows, cols)] = rng.uniform(mu - 2 * sd, mu + 2 * sd, size=(rows.size, cols.size))
    return out, (rows, cols)


def method_representation(Z, y, method, threshold=0.92, d=None, smoothing_window=5, normalizer_mode="std"):
    """The output space a method hands to its classifier: selected columns or projections."""
    if method == "pide":
        fw = pide_weights(Z, y, PideConfig(threshold, smoothing_window, normalizer_mode))
        return Z[:, fw.selected]
    if method == "cide":
        return Z[:, cide_weights(Z, y, threshold).selected]
    if method == "pca":
        return pca_fit(Z, d).transform(Z)
    if method == "lda":
        return lda_fit(Z, y).transform(Z)
    raise ValueError(f"unknown method {method!r}; expected one of {ROBUSTNESS_METHODS}")


@dataclass
class RobustnessTable:
    methods: list
    ratios: list
    mean: np.ndarray  # methods x ratios, over all trials and output features
    std: np.ndarray
    trial_mean: np.ndarray  # methods x ratios x trials, mean over output features
    trial_std: np.ndarray

    def rows(self):
        return [{"method": m, "ratio": r, "mean": self.mean[i, j], "std": self.std[i, j]}
                for i, m in enumerate(self.methods) for j, r in enumerate(self.ratios)]

    def samples(self, metric="mean"):
        """Per-method observations (ratio x trial, flattened in a fixed order) for rank tests."""
        src = self.trial_mean if metric == "mean" else self.trial_std
        return {m: src[i].ravel() for i, m in enumerate(self.methods)}


def robustness_experiment(X, y, methods=ROBUSTNESS_METHODS, noise_ratios=None, trials: int = 30,
                          seed: int = 0, selection: SelectionConfig = SelectionConfig()) -> RobustnessTable:
    """Inject noise at each ratio (instance = feature ratio), rebuild every method's output
    representation and score it with the class-averaged robustness metric."""
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=int)
    methods = list(methods)
    for m in methods:
        if m not in ROBUSTNESS_METHODS:
            raise ValueError(f"unknown method {m!r}; expected a subset of {ROBUSTNESS_METHODS}")
    ratios = list(default_ratio_grid() if noise_ratios is None else noise_ratios)
    M, R = len(methods), len(ratios)
    pooled = [[[] for _ in range(R)] for _ in range(M)]
    tmean = np.zeros((M, R, trials))
    tstd = np.zeros((M, R, trials))
    trial_seeds = np.random.SeedSequence(seed).spawn(trials)
    for t, ss in enumerate(trial_seeds):
        ratio_seeds = ss.spawn(R)
        for j, r in enumerate(ratios):
            noisy, _ = inject_noise(X, NoiseSpec(r, r, int(ratio_seeds[j].generate_state(1)[0])))
            Z, _ = standardize(noisy)
            for i, m in enumerate(methods):
                rep = method_representation(Z, y, m, selection.threshold, selection.d,
                                            selection.smoothing_window, selection.normalizer_mode)
                rob = class_robustness(rep, y, selection.smoothing_window, selection.normalizer_mode)
                pooled[i][j].extend(rob.tolist())
                tmean[i, j, t] = rob.mean()
                tstd[i, j, t] = rob.std()
    mean = np.array([[np.mean(pooled[i][j]) for j in range(R)] for i in range(M)])
    std = np.array([[np.std(pooled[i][j]) for j in range(R)] for i in range(M)])
    return RobustnessTable(methods, ratios, mean, std, tmean, tstd)


def default_ratio_grid():
    return [round(0.001 * i, 3) for i in range(1, 11)]


def default_threshold_grid():
    return [round(0.02 * i, 2) for i in range(51)]


@dataclass
class SweepRow:
    threshold: float
    n_selected: int
    accuracy: float
    accuracy_std: float


def threshold_sweep(X, y, thresholds=None, stages: PipelineStages = PipelineStages(),
                    folds: int = 5, seed: int = 0) -> list[SweepRow]:
    """Full-data selected-feature count and CV accuracy of the weighted pipeline per threshold."""
    thresholds = list(default_threshold_grid() if thresholds is None else thresholds)
    if any(b < a for a, b in zip(thresholds, thresholds[1:])) or any(not 0 <= t <= 1 for t in thresholds):
        raise ValueError("thresholds must be sorted ascending within [0, 1]")
    sel = stages.selection
    Z, _ = standardize(X)
    if sel.method == "pide":
        fw = pide_weights(Z, y, PideConfig(0.0, sel.smoothing_window, sel.normalizer_mode))
    elif sel.method == "cide":
        fw = cide_weights(Z, y, 0.0)
    else:
        raise ValueError("threshold sweep applies to the pide/cide weighting methods")
    out = []
    for t in thresholds:
        cv = cross_validate(X, y, replace(stages, selection=replace(sel, threshold=t)), folds, seed)
        out.append(SweepRow(t, int(fw.with_threshold(t).selected.size), cv.mean, cv.std))
    counts = [r.n_selected for r in out]
    assert all(b <= a for a, b in zip(counts, counts[1:])), "selected count must not grow with threshold"
    return out


@dataclass(frozen=True)
class TestResult:
    statistic: float  # H for Kruskal-Wallis, Z for Wilcoxon
    p_value: float
    df: Optional[int] = None
    w_plus: Optional[float] = None
    n: Optional[int] = None
    degenerate: bool = False

    __test__ = False  # not a pytest class


def kruskal_wallis(groups: Sequence) -> TestResult:
    groups = [np.asarray(g, dtype=float).ravel() for g in groups]
    if len(groups) < 2 or any(g.size == 0 for g in groups):
        raise ValueError("Kruskal-Wallis needs >= 2 non-empty groups")
    allv = np.concatenate(groups)
    n = allv.size
    if n < 3:
        raise ValueError("Kruskal-Wallis needs at least 3 observations in total")
    df = len(groups) - 1
    ranks = stats.rankdata(allv)
    _, t = np.unique(allv, return_counts=True)
    tie = 1 - np.sum(t ** 3 - t) / (n ** 3 - n)
    if tie == 0:
        return TestResult(0.0, 1.0, df, degenerate=True)
    h, start = 0.0, 0
    for g in groups:
        r = ranks[start:start + g.size]
        start += g.size
        h += g.size * (r.mean() - (n + 1) / 2) ** 2
    h = 12 / (n * (n + 1)) * h / tie
    return TestResult(float(h), float(stats.chi2.sf(h, df)), df, n=n)


def wilcoxon_signed_rank(a, b) -> TestResult:
    """Normal approximation with tie and continuity corrections; zero differences dropped."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape:
        raise ValueError("paired samples must have equal length")
    d = (a - b).ravel()
    d = d[d != 0]
    n = d.size
    if n == 0:
        return TestResult(0.0, 1.0, n=0, w_plus=0.0, degenerate=True)
    mag = np.abs(d)
    ranks = stats.rankdata(mag)
    w_plus = float(ranks[d > 0].sum())
    _, t = np.unique(mag, return_counts=True)
    var = n * (n + 1) * (2 * n + 1) / 24 - np.sum(t ** 3 - t) / 48
    diff = w_plus - n * (n + 1) / 4
    diff = math.copysign(max(abs(diff) - 0.5, 0.0), diff)
    if var <= 0:
        return TestResult(0.0, 1.0, w_plus=w_plus, n=n, degenerate=True)
    z = diff / math.sqrt(var)
    return TestResult(z, float(min(1.0, 2 * stats.norm.sf(abs(z)))), w_plus=w_plus, n=n)

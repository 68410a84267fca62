"""Filter-style feature weighting (distance evaluation with and without a robustness term) and
linear projection baselines (PCA, LDA)."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np
import scipy.linalg

EPS = 1e-12
DEFAULT_THRESHOLD = 0.92
NORMALIZER_MODES = ("std", "relative")


@dataclass
class Standardizer:
    mean: np.ndarray
    std: np.ndarray
    constant: np.ndarray  # bool mask of zero-std columns

    @classmethod
    def fit(cls, X):
        X = np.asarray(X, dtype=float)
        mean = X.mean(axis=0)
        std = X.std(axis=0, ddof=1) if X.shape[0] > 1 else np.zeros(X.shape[1])
        constant = ~(std > 0)
        return cls(mean, np.where(constant, 1.0, std), constant)

    @classmethod
    def identity(cls, J):
        return cls(np.zeros(J), np.ones(J), np.zeros(J, dtype=bool))

    def transform(self, X):
        Z = (np.asarray(X, dtype=float) - self.mean) / self.std
        Z[..., self.constant] = 0.0
        return Z


def standardize(X):
    """Column-wise z-score with the N-1 std. Returns (Z, Standardizer); zero-std columns become 0."""
    s = Standardizer.fit(X)
    return s.transform(X), s


def _check_labeled(X, y):
    X = np.asarray(X, dtype=float)
    y = np.asarray(y)
    if X.ndim != 2 or X.shape[1] < 1:
        raise ValueError("feature matrix must be 2-D with at least one column")
    if y.shape != (X.shape[0],):
        raise ValueError(f"{y.size} labels for {X.shape[0]} rows")
    classes = np.unique(y)
    if classes.size < 2:
        raise ValueError("need at least two classes")
    return X, y, classes


def intra_inter(X, y):
    """Per-feature mean within-class pairwise |difference| and mean |difference| of class means.

    Within-class: average over ordered pairs m != n, then over classes (a single-sample class
    contributes 0). Between-class: average over unordered class pairs.
    """
    X, y, classes = _check_labeled(X, y)
    d_w = np.zeros(X.shape[1])
    means = []
    for c in classes:
        Q = X[y == c]
        n = Q.shape[0]
        means.append(Q.mean(axis=0))
        if n > 1:
            # sum_{m != n} |q_m - q_n| = 2 * sum_i (2i - n + 1) q_(i) over sorted values
            Qs = np.sort(Q, axis=0)
            coef = 2 * np.arange(n) - n + 1
            d_w += 2 * (coef @ Qs) / (n * (n - 1))
    d_w /= classes.size
    U = np.array(means)
    iu, ju = np.triu_indices(classes.size, k=1)
    d_b = np.abs(U[iu] - U[ju]).mean(axis=0)
    return d_w, d_b


def moving_average(x, width: int):
    """Centred moving average; the window shrinks symmetrically-truncated at the edges."""
    x = np.asarray(x, dtype=float)
    if width < 1 or width % 2 == 0:
        raise ValueError("smoothing window must be an odd integer >= 1")
    h = width // 2
    c = np.concatenate([[0.0], np.cumsum(x)])
    k = np.arange(x.size)
    lo = np.maximum(k - h, 0)
    hi = np.minimum(k + h + 1, x.size)
    return (c[hi] - c[lo]) / (hi - lo)


def robustness(x, smoothing_window: int = 5, normalizer_mode: str = "std") -> float:
    """Mean of exp(-|x_k - trend_k| / scale) over the sequence, in (0, 1].

    scale is the population std of x ("std") or |x_k| ("relative"). A zero scale means no
    measurable fluctuation and scores 1 (per-sample in "relative" mode).
    """
    x = np.asarray(x, dtype=float)
    if x.size == 0:
        raise ValueError("robustness of an empty series")
    if normalizer_mode not in NORMALIZER_MODES:
        raise ValueError(f"unknown normalizer mode {normalizer_mode!r}")
    if np.ptp(x) == 0:
        # a rounded mean would leave ~1e-16 residuals and std; a constant series is perfectly stable
        return 1.0
    resid = np.abs(x - moving_average(x, smoothing_window))
    if normalizer_mode == "std":
        scale = x.std()
        if scale == 0:
            return 1.0
        return float(np.mean(np.exp(-resid / scale)))
    scale = np.abs(x)
    terms = np.ones_like(x)
    ok = scale > 0
    terms[ok] = np.exp(-resid[ok] / scale[ok])
    return float(terms.mean())


def class_robustness(X, y, smoothing_window=5, normalizer_mode="std"):
    """Per-feature robustness averaged over classes; rows of each class kept in dataset order."""
    X, y, classes = _check_labeled(X, y)
    rob = np.zeros(X.shape[1])
    for c in classes:
        Q = X[y == c]
        rob += [robustness(Q[:, j], smoothing_window, normalizer_mode) for j in range(X.shape[1])]
    return rob / classes.size


@dataclass
class FeatureWeights:
    w: np.ndarray
    d_w: np.ndarray
    d_b: np.ndarray
    rob: np.ndarray
    threshold: float

    @property
    def selected(self) -> np.ndarray:
        return np.flatnonzero(self.w >= self.threshold)

    def with_threshold(self, threshold):
        return FeatureWeights(self.w, self.d_w, self.d_b, self.rob, threshold)

    def to_table(self, names=None):
        names = names if names is not None else [f"f{j}" for j in range(self.w.size)]
        sel = set(self.selected.tolist())
        return [
            {"name": n, "d_w": self.d_w[j], "d_b": self.d_b[j], "rob": self.rob[j],
             "w": self.w[j], "selected": int(j in sel)}
            for j, n in enumerate(names)
        ]


@dataclass
class PideConfig:
    threshold: float = DEFAULT_THRESHOLD
    smoothing_window: int = 5
    normalizer_mode: str = "std"
    use_robustness: bool = True


def pide_weights(Z, y, config: PideConfig = PideConfig()) -> FeatureWeights:
    """Weight each feature by (between / within class distance) x robustness, scaled to max 1.

    Expects a standardized matrix. Features with w >= config.threshold are selected.
    """
    if not 0 <= config.threshold <= 1:
        raise ValueError("threshold must be in [0, 1]")
    d_w, d_b = intra_inter(Z, y)
    if config.use_robustness:
        rob = class_robustness(Z, y, config.smoothing_window, config.normalizer_mode)
    else:
        rob = np.ones_like(d_w)
    raw = d_b / (d_w + EPS) * rob
    top = raw.max()
    if not top > 0:
        raise ValueError("degenerate dataset: every feature has zero between-class distance")
    return FeatureWeights(raw / top, d_w, d_b, rob, config.threshold)


def cide_weights(Z, y, threshold: float = DEFAULT_THRESHOLD) -> FeatureWeights:
    """Conventional distance evaluation: the same weighting with the robustness term fixed at 1."""
    return pide_weights(Z, y, PideConfig(threshold=threshold, use_robustness=False))


@dataclass
class LinearProjection:
    mean: np.ndarray
    basis: np.ndarray  # J x d
    explained: np.ndarray

    def transform(self, rows):
        return (np.asarray(rows, dtype=float) - self.mean) @ self.basis

    def inverse(self, reduced):
        return np.asarray(reduced) @ self.basis.T + self.mean


def _fix_signs(V):
    idx = np.argmax(np.abs(V), axis=0)
    signs = np.sign(V[idx, np.arange(V.shape[1])])
    signs[signs == 0] = 1
    return V * signs


def pca_fit(X, d: Optional[int] = None, min_explained: float = 0.95) -> LinearProjection:
    """Top-d eigenvectors of the sample covariance. d=None keeps the fewest components whose
    cumulative explained-variance fraction reaches `min_explained`."""
    X = np.asarray(X, dtype=float)
    J = X.shape[1]
    if d is not None and not 1 <= d <= J:
        raise ValueError(f"d must be in [1, {J}], got {d}")
    mean = X.mean(axis=0)
    C = np.cov(X, rowvar=False, ddof=1).reshape(J, J)
    vals, vecs = np.linalg.eigh(C)
    order = np.argsort(vals)[::-1]
    vals = np.clip(vals[order], 0, None)
    vecs = vecs[:, order]
    total = vals.sum()
    frac = vals / total if total > 0 else np.zeros_like(vals)
    if d is None:
        d = int(np.searchsorted(np.cumsum(frac), min_explained - 1e-12) + 1) if total > 0 else 1
        d = min(d, J)
    return LinearProjection(mean, _fix_signs(vecs[:, :d]), frac[:d])


def pca_transform(proj: LinearProjection, rows):
    return proj.transform(rows)


def scatter_matrices(X, y):
    X, y, classes = _check_labeled(X, y)
    mean = X.mean(axis=0)
    J = X.shape[1]
    Sw = np.zeros((J, J))
    Sb = np.zeros((J, J))
    for c in classes:
        Q = X[y == c]
        mc = Q.mean(axis=0)
        D = Q - mc
        Sw += D.T @ D
        Sb += Q.shape[0] * np.outer(mc - mean, mc - mean)
    return Sw, Sb, mean


def lda_fit(X, y, d: Optional[int] = None) -> LinearProjection:
    """Top-d eigenvectors of (Sw + g I)^-1 Sb with ridge g = 1e-6 trace(Sw)/J; d <= S-1."""
    X, y, classes = _check_labeled(X, y)
    S = classes.size
    d = S - 1 if d is None else d
    if not 1 <= d <= S - 1:
        raise ValueError(f"LDA yields at most {S - 1} components for {S} classes, {d} requested")
    J = X.shape[1]
    if d > J:
        raise ValueError(f"d={d} exceeds feature count {J}")
    Sw, Sb, mean = scatter_matrices(X, y)
    gamma = 1e-6 * np.trace(Sw) / J
    if gamma <= 0:
        gamma = EPS
    # symmetric-definite generalized problem Sb v = lambda (Sw + g I) v
    vals, vecs = scipy.linalg.eigh(Sb, Sw + gamma * np.eye(J))
    order = np.argsort(vals)[::-1][:d]
    vals = np.clip(vals[order], 0, None)
    total = vals.sum()
    return LinearProjection(mean, _fix_signs(vecs[:, order]), vals / total if total > 0 else vals)


def lda_transform(proj: LinearProjection, rows):
    return proj.transform(rows)

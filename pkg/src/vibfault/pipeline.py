"""End-to-end runs: signals -> fused features -> selection -> weighted KNN -> CV report."""
from __future__ import annotations

import csv
import logging
import time
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .classify import PipelineStages, SelectionConfig, cross_validate
from .config import PipelineConfig, dumps_config
from .evaluation import accuracy, confusion, roc_auc_ovr
from .features import feature_matrix, feature_names
from .ingest import Signal, load_signal, segment, synth_signals
from .selection import PideConfig, cide_weights, lda_fit, pca_fit, pide_weights, standardize

log = logging.getLogger(__name__)


class StageError(RuntimeError):
    def __init__(self, stage, cause):
        super().__init__(f"{stage} stage failed: {cause}")
        self.stage = stage


class _stage:
    def __init__(self, name):
        self.name = name

    def __enter__(self):
        log.info("stage: %s", self.name)

    def __exit__(self, exc_type, exc, tb):
        if exc is not None and not isinstance(exc, StageError) and isinstance(exc, Exception):
            raise StageError(self.name, exc) from exc
        return False


def read_manifest(path):
    """Rows of (path, label, channel, sample_rate-or-None). Relative paths resolve against the manifest."""
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"manifest not found: {path}")
    rows = []
    with path.open(encoding="utf-8", newline="") as fh:
        for rec in csv.DictReader(fh):
            p = Path(rec["path"])
            if not p.is_absolute():
                p = path.parent / p
            sr = rec.get("sample_rate") or None
            rows.append((p, int(rec["label"]), int(rec.get("channel") or 0), float(sr) if sr else None))
    if not rows:
        raise ValueError(f"{path}: manifest lists no signal files")
    return rows


def write_manifest(path, rows):
    with Path(path).open("w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["path", "label", "channel", "sample_rate"])
        for p, label, channel, sr in rows:
            w.writerow([p, label, channel, repr(float(sr))])


def labeled_signals(cfg: PipelineConfig, manifest=None) -> list[tuple[int, Signal]]:
    manifest = manifest or (cfg.manifest if cfg.source == "files" else None)
    if manifest is None:
        return synth_signals(cfg.synth, cfg.seed)
    return [(label, load_signal(p, ch, sr or cfg.sample_rate)) for p, label, ch, sr in read_manifest(manifest)]


def extract(cfg: PipelineConfig, manifest=None):
    """(X, y, names) from the configured data source; windows kept in acquisition order per class."""
    with _stage("ingest"):
        signals = labeled_signals(cfg, manifest)
        windows = []
        for label, sig in signals:
            windows.extend(segment(sig, cfg.window_len, cfg.hop, label=label))
        order = np.argsort([w.label for w in windows], kind="stable")
        windows = [windows[i] for i in order]
    with _stage("features"):
        X, y = feature_matrix(windows, cfg.wavelet)
    return X, y, feature_names(cfg.wavelet.levels)


def full_data_selection(X, y, selection: SelectionConfig):
    """Weights or projection fit on all rows; its selected count is the single-number feature count."""
    Z, _ = standardize(X)
    m = selection.method
    if m == "pide":
        fw = pide_weights(Z, y, PideConfig(selection.threshold, selection.smoothing_window, selection.normalizer_mode))
        return fw, int(fw.selected.size)
    if m == "cide":
        fw = cide_weights(Z, y, selection.threshold)
        return fw, int(fw.selected.size)
    if m == "pca":
        return pca_fit(Z, selection.d), None
    if m == "lda":
        return lda_fit(Z, y, selection.d), None
    return None, X.shape[1]


@dataclass
class RunReport:
    config_text: str
    names: list
    weights: object  # FeatureWeights, LinearProjection or None
    n_selected: int
    selected_names: list
    fold_accuracies: np.ndarray
    fold_selected_counts: list
    confusion: object
    auc: object
    seed: int
    wall_clock_s: float = 0.0

    @property
    def mean_accuracy(self):
        return float(np.mean(self.fold_accuracies))

    @property
    def std_accuracy(self):
        return float(np.std(self.fold_accuracies, ddof=1))

    def summary_lines(self):
        return [
            f"seed = {self.seed}",
            f"n_features = {len(self.names)}",
            f"n_selected = {self.n_selected}",
            f"cv_accuracy_mean = {self.mean_accuracy!r}",
            f"cv_accuracy_std = {self.std_accuracy!r}",
            f"pooled_accuracy = {accuracy(self.confusion)!r}",
            f"macro_auc = {self.auc.macro!r}",
            f"selected = {' '.join(self.selected_names)}",
        ]

    def write(self, out_dir):
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        (out / "config.ini").write_text(self.config_text, encoding="utf-8")
        (out / "report.txt").write_text("\n".join(self.summary_lines()) + "\n", encoding="utf-8")
        write_weight_table(out / "weights.csv", self.weights, self.names)
        write_rows(out / "folds.csv", ["fold", "accuracy", "n_selected"],
                   [[i, repr(float(a)), c] for i, (a, c) in enumerate(zip(self.fold_accuracies, self.fold_selected_counts))])
        write_confusion(out / "confusion.csv", self.confusion)
        write_rows(out / "auc.csv", ["class", "auc"],
                   [[int(c), repr(float(a))] for c, a in zip(self.auc.classes, self.auc.per_class)]
                   + [["macro", repr(self.auc.macro)]])
        (out / "timing.txt").write_text(f"wall_clock_s = {self.wall_clock_s:.3f}\n", encoding="utf-8")


def write_rows(path, header, rows):
    with Path(path).open("w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


def write_confusion(path, cm):
    write_rows(path, ["true\\pred"] + [int(c) for c in cm.classes],
               [[int(c)] + row.tolist() for c, row in zip(cm.classes, cm.counts)])


def write_weight_table(path, weights, names):
    """One row per feature (pide/cide), per component (pca/lda), or uniform weights (none)."""
    if weights is None:
        write_rows(path, ["name", "w", "selected"], [[n, "1.0", 1] for n in names])
    elif hasattr(weights, "to_table"):
        rows = weights.to_table(names)
        write_rows(path, ["name", "d_w", "d_b", "rob", "w", "selected"],
                   [[r["name"], repr(float(r["d_w"])), repr(float(r["d_b"])), repr(float(r["rob"])),
                     repr(float(r["w"])), r["selected"]] for r in rows])
    else:
        write_rows(path, ["component", "explained"],
                   [[i, repr(float(e))] for i, e in enumerate(weights.explained)])


def run_features(cfg: PipelineConfig, X, y, names) -> RunReport:
    t0 = time.perf_counter()
    with _stage("selection"):
        weights, n_sel = full_data_selection(X, y, cfg.selection)
    if hasattr(weights, "selected"):
        sel_names = [names[j] for j in weights.selected]
    elif weights is None:
        sel_names = list(names)
    else:
        n_sel = weights.basis.shape[1]
        sel_names = [f"{cfg.selection.method}{i}" for i in range(n_sel)]
    with _stage("classify"):
        cv = cross_validate(X, y, cfg.stages, cfg.folds, cfg.seed)
    with _stage("eval"):
        cm = confusion(y, cv.predictions, cv.classes)
        auc = roc_auc_ovr(cv.scores, y, cv.classes)
    return RunReport(dumps_config(cfg), list(names), weights, n_sel, sel_names, cv.accuracies,
                     cv.fold_selected_counts, cm, auc, cfg.seed, time.perf_counter() - t0)


def run(cfg: PipelineConfig, out_dir=None, manifest=None) -> RunReport:
    t0 = time.perf_counter()
    X, y, names = extract(cfg, manifest)
    report = run_features(cfg, X, y, names)
    report.wall_clock_s = time.perf_counter() - t0
    if out_dir is not None:
        report.write(out_dir)
    return report


def method_config(cfg: PipelineConfig, method: str) -> PipelineConfig:
    """PIDE keeps the configured k; the baselines use baseline_k."""
    k = cfg.k if method == "pide" else cfg.baseline_k
    return replace(cfg, selection=replace(cfg.selection, method=method), k=k)


def compare_methods(cfg: PipelineConfig, methods, X=None, y=None, names=None) -> list[dict]:
    if X is None:
        X, y, names = extract(cfg)
    rows = []
    for m in methods:
        mc = method_config(cfg, m)
        rep = run_features(mc, X, y, names)
        s = mc.selection
        if m in ("pide", "cide"):
            hp = f"threshold={s.threshold!r}"
            if m == "pide":
                hp += f";smoothing_window={s.smoothing_window};normalizer={s.normalizer_mode}"
        elif m in ("pca", "lda"):
            hp = f"d={rep.n_selected}"
        else:
            hp = ""
        rows.append({
            "method": m,
            "classifier": "wknn" if m == "pide" else "knn",
            "k": mc.k,
            "distance": "weighted_euclidean" if m == "pide" else "standardized_euclidean",
            "n_selected": rep.n_selected,
            "accuracy_mean": rep.mean_accuracy,
            "accuracy_std": rep.std_accuracy,
            "macro_auc": rep.auc.macro,
            "hyperparameters": hp,
        })
    return rows

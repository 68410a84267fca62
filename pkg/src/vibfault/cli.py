"""vibfault command line: batch experiments writing delimited tables into an output directory.

Exit codes: 0 success, 1 usage/config error, 2 data/runtime error.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import pipeline
from .classify import METHODS, WknnModel, fit_pipeline, wknn_predict_many
from .config import ConfigError, PipelineConfig, load_config
from .evaluation import (
    accuracy, confusion, kruskal_wallis, robustness_experiment, roc_auc_ovr, threshold_sweep,
    wilcoxon_signed_rank,
)
from .features import load_feature_matrix, save_feature_matrix
from .ingest import save_signal, synth_signals

log = logging.getLogger("vibfault")

FETCH_INSTRUCTIONS = """\
University of Ottawa bearing vibration data under time-varying speed:
  H. Huang, N. Baddour (2018), "Bearing vibration data collected under time-varying
  rotational speed conditions", Data in Brief 21, 1740-1749.  doi:10.1016/j.dib.2018.11.019
  The data is distributed by the dataset authors (Mendeley Data); download it yourself and respect
  its licence. vibfault never downloads anything.

Expected layout (convert each record to delimited text, one sample per row; column 0 =
accelerometer, column 1 = encoder):
  ottawa/
    manifest.csv          path,label,channel,sample_rate
    H-D-1.csv ...         healthy, decreasing speed      -> label 1
    I-D-1.csv ...         inner race fault, decreasing   -> label 2
    O-D-1.csv ...         outer race fault, decreasing   -> label 3

Then point a config at it:
  [data]
  source = files
  manifest = ottawa/manifest.csv
  sample_rate = 200000      ; take the rate from the dataset documentation
and run e.g.  vibfault evaluate --config ottawa.ini --out runs/ottawa
"""


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def build_parser():
    p = _Parser(prog="vibfault", description="Vibration feature fusion, weighting and weighted-KNN fault diagnosis.")
    p.add_argument("--fetch-instructions", action="store_true",
                   help="print where to get the Ottawa bearing data and the expected file layout")
    common = _Parser(add_help=False)
    common.add_argument("--config", help="INI config file (defaults apply when omitted)")
    common.add_argument("--out", required=True, help="output directory")
    common.add_argument("--seed", type=int, help="override the master seed")
    common.add_argument("-v", "--verbose", action="count", default=0)
    feats = _Parser(add_help=False)
    feats.add_argument("--features", help="feature matrix CSV from `extract` (computed from the config if omitted)")

    sub = p.add_subparsers(dest="command", parser_class=_Parser)
    sub.add_parser("synth", parents=[common], help="generate synthetic signal files and a manifest")
    e = sub.add_parser("extract", parents=[common], help="windows -> 112-feature matrix")
    e.add_argument("--manifest", help="manifest CSV (path,label[,channel,sample_rate])")
    s = sub.add_parser("select", parents=[common, feats], help="feature weights and selection")
    s.add_argument("--method", choices=METHODS)
    s.add_argument("--threshold", type=float)
    sub.add_parser("train", parents=[common, feats], help="fit the configured pipeline on all rows")
    ev = sub.add_parser("evaluate", parents=[common, feats], help="stratified CV report, or score a trained model")
    ev.add_argument("--model", help="model JSON from `train`; evaluates it on --features instead of CV")
    sub.add_parser("sweep-threshold", parents=[common, feats], help="selected count and CV accuracy per threshold")
    r = sub.add_parser("robustness", parents=[common, feats], help="noise-injection robustness table and rank tests")
    r.add_argument("--trials", type=int)
    c = sub.add_parser("compare", parents=[common, feats], help="method comparison table")
    c.add_argument("--methods", default="lda,pca,cide,pide", help="comma list from " + ",".join(METHODS))
    return p


def _config(args) -> PipelineConfig:
    cfg = load_config(args.config) if args.config else PipelineConfig()
    if args.seed is not None:
        cfg.seed = args.seed
    return cfg


def _features(args, cfg):
    if getattr(args, "features", None):
        X, y, names = load_feature_matrix(args.features)
        log.info("loaded %d x %d feature matrix from %s", X.shape[0], X.shape[1], args.features)
        return X, y, names
    return pipeline.extract(cfg)


def cmd_synth(args, cfg, out):
    rows = []
    sig_dir = out / "signals"
    sig_dir.mkdir(parents=True, exist_ok=True)
    for label, sig in synth_signals(cfg.synth, cfg.seed):
        path = sig_dir / f"class_{label}.csv"
        save_signal(path, sig)
        rows.append((f"signals/{path.name}", label, 0, sig.sample_rate))
        log.info("wrote %s (%d samples)", path, len(sig))
    pipeline.write_manifest(out / "manifest.csv", rows)


def cmd_extract(args, cfg, out):
    X, y, names = pipeline.extract(cfg, args.manifest)
    save_feature_matrix(out / "features.csv", X, y, names)
    log.info("wrote %d windows x %d features", *X.shape)


def cmd_select(args, cfg, out):
    sel = cfg.selection
    if args.method:
        sel = replace(sel, method=args.method)
    if args.threshold is not None:
        sel = replace(sel, threshold=args.threshold)
    X, y, names = _features(args, cfg)
    weights, n_sel = pipeline.full_data_selection(X, y, sel)
    pipeline.write_weight_table(out / "weights.csv", weights, names)
    log.info("method %s: %s", sel.method, f"{n_sel} features selected" if n_sel is not None else "projection fitted")


def cmd_train(args, cfg, out):
    X, y, names = _features(args, cfg)
    fitted = fit_pipeline(X, y, cfg.stages)
    if fitted.projection is not None:
        raise ValueError("train exports weighted-KNN models on selected features; use method pide, cide or none")
    (out / "model.json").write_text(fitted.model.to_json([names[j] for j in fitted.columns]), encoding="utf-8")
    (out / "config.ini").write_text(pipeline.dumps_config(cfg), encoding="utf-8")


def cmd_evaluate(args, cfg, out):
    X, y, names = _features(args, cfg)
    if args.model:
        text = Path(args.model).read_text(encoding="utf-8")
        model = WknnModel.from_json(text)
        wanted = json.loads(text)["feature_names"]
        idx = [names.index(n) for n in wanted]
        labels, scores = wknn_predict_many(model, X[:, idx])
        cm = confusion(y, labels, np.union1d(model.classes, y))
        auc = roc_auc_ovr(scores, y, model.classes) if set(np.unique(y)) <= set(model.classes) else None
        pipeline.write_confusion(out / "confusion.csv", cm)
        lines = [f"accuracy = {accuracy(cm)!r}"]
        if auc is not None:
            lines.append(f"macro_auc = {auc.macro!r}")
        (out / "report.txt").write_text("\n".join(lines) + "\n", encoding="utf-8")
        return
    rep = pipeline.run_features(cfg, X, y, names)
    rep.write(out)
    log.info("cv accuracy %.4f +- %.4f, macro AUC %.4f", rep.mean_accuracy, rep.std_accuracy, rep.auc.macro)


def cmd_sweep(args, cfg, out):
    X, y, _ = _features(args, cfg)
    rows = threshold_sweep(X, y, cfg.thresholds, cfg.stages, cfg.folds, cfg.seed)
    pipeline.write_rows(out / "sweep.csv", ["threshold", "n_selected", "accuracy", "accuracy_std"],
                        [[repr(r.threshold), r.n_selected, repr(r.accuracy), repr(r.accuracy_std)] for r in rows])


def cmd_robustness(args, cfg, out):
    X, y, _ = _features(args, cfg)
    trials = args.trials or cfg.trials
    tab = robustness_experiment(X, y, cfg.robustness_methods, cfg.noise_ratios, trials, cfg.seed, cfg.selection)
    pipeline.write_rows(out / "robustness.csv", ["method", "ratio", "mean", "std"],
                        [[r["method"], repr(r["ratio"]), repr(float(r["mean"])), repr(float(r["std"]))] for r in tab.rows()])
    lines = []
    for metric in ("mean", "std"):
        groups = tab.samples(metric)
        if len(groups) >= 2:
            kw = kruskal_wallis(list(groups.values()))
            lines += [f"kruskal_wallis.{metric}.H = {kw.statistic!r}", f"kruskal_wallis.{metric}.df = {kw.df}",
                      f"kruskal_wallis.{metric}.p = {kw.p_value!r}"]
        if "pide" in groups:
            for other in groups:
                if other == "pide":
                    continue
                wx = wilcoxon_signed_rank(groups["pide"], groups[other])
                lines += [f"wilcoxon.{metric}.pide_vs_{other}.Z = {wx.statistic!r}",
                          f"wilcoxon.{metric}.pide_vs_{other}.p = {wx.p_value!r}"]
    (out / "rank_tests.txt").write_text("\n".join(lines) + "\n", encoding="utf-8")


def cmd_compare(args, cfg, out):
    methods = [m.strip() for m in args.methods.split(",") if m.strip()]
    bad = [m for m in methods if m not in METHODS]
    if bad:
        raise ConfigError(f"unknown methods {bad}; choose from {METHODS}")
    X, y, names = _features(args, cfg)
    rows = pipeline.compare_methods(cfg, methods, X, y, names)
    cols = list(rows[0])
    pipeline.write_rows(out / "compare.csv", cols,
                        [[repr(r[c]) if isinstance(r[c], float) else r[c] for c in cols] for r in rows])


COMMANDS = {
    "synth": cmd_synth, "extract": cmd_extract, "select": cmd_select, "train": cmd_train,
    "evaluate": cmd_evaluate, "sweep-threshold": cmd_sweep, "robustness": cmd_robustness,
    "compare": cmd_compare,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    if args.fetch_instructions:
        print(FETCH_INSTRUCTIONS, end="")
        return 0
    if not args.command:
        parser.print_usage(sys.stderr)
        print("vibfault: error: a subcommand is required", file=sys.stderr)
        return 1
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose + 1, 2),
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    try:
        cfg = _config(args)
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
    except ConfigError as e:
        print(f"vibfault: config error: {e}", file=sys.stderr)
        return 1
    except OSError as e:
        print(f"vibfault: cannot use output directory: {e}", file=sys.stderr)
        return 1
    try:
        COMMANDS[args.command](args, cfg, out)
    except ConfigError as e:
        print(f"vibfault: config error: {e}", file=sys.stderr)
        return 1
    except (ValueError, OSError, RuntimeError, KeyError) as e:
        print(f"vibfault: {args.command} failed: {e}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())

"""Selected-feature count and CV accuracy across the PIDE threshold grid.

    python scripts/threshold_sweep.py --out runs/sweep.csv [--config ...] [--method cide]
"""
import argparse
from dataclasses import replace

from vibfault.config import PipelineConfig, load_config
from vibfault.evaluation import threshold_sweep
from vibfault.pipeline import extract, write_rows


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--config")
    ap.add_argument("--out", default="runs/sweep.csv")
    ap.add_argument("--method", choices=["pide", "cide"], default="pide")
    args = ap.parse_args()
    cfg = load_config(args.config) if args.config else PipelineConfig()
    cfg.selection = replace(cfg.selection, method=args.method)
    X, y, _ = extract(cfg)
    rows = threshold_sweep(X, y, cfg.thresholds, cfg.stages, cfg.folds, cfg.seed)
    write_rows(args.out, ["threshold", "n_selected", "accuracy", "accuracy_std"],
               [[r.threshold, r.n_selected, r.accuracy, r.accuracy_std] for r in rows])
    best = max(r.accuracy for r in rows)
    for r in rows:
        mark = " <- default" if r.threshold == 0.92 else ""
        print(f"{r.threshold:5.2f} {r.n_selected:4d} {r.accuracy:.4f}{mark}")
    print(f"best accuracy {best:.4f}")


if __name__ == "__main__":
    main()

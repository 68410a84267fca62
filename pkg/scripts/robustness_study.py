"""Noise-injection robustness of PIDE, CIDE, PCA and LDA outputs, with rank tests.

    python scripts/robustness_study.py --out runs/robustness [--trials 30]
"""
import argparse
from pathlib import Path

from vibfault.config import PipelineConfig, load_config
from vibfault.evaluation import kruskal_wallis, robustness_experiment, wilcoxon_signed_rank
from vibfault.pipeline import extract, write_rows


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--config")
    ap.add_argument("--out", default="runs/robustness")
    ap.add_argument("--trials", type=int)
    args = ap.parse_args()
    cfg = load_config(args.config) if args.config else PipelineConfig()
    X, y, _ = extract(cfg)
    tab = robustness_experiment(X, y, cfg.robustness_methods, cfg.noise_ratios, args.trials or cfg.trials,
                                cfg.seed, cfg.selection)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_rows(out / "robustness.csv", ["method", "ratio", "mean", "std"],
               [[r["method"], r["ratio"], r["mean"], r["std"]] for r in tab.rows()])
    for i, m in enumerate(tab.methods):
        print(f"{m:5s} " + " ".join(f"{v:.4f}" for v in tab.mean[i]))
    groups = tab.samples("mean")
    kw = kruskal_wallis(list(groups.values()))
    print(f"Kruskal-Wallis H={kw.statistic:.3f} df={kw.df} p={kw.p_value:.3g}")
    for other in groups:
        if other != "pide":
            wx = wilcoxon_signed_rank(groups["pide"], groups[other])
            print(f"Wilcoxon pide vs {other}: Z={wx.statistic:.3f} p={wx.p_value:.3g}")


if __name__ == "__main__":
    main()

"""Dataset-gated check on the Ottawa bearing records: PIDE-WKNN 5-fold accuracy and feature count.

Place the data as printed by `vibfault --fetch-instructions`, then
    python scripts/check_ottawa.py scripts/configs/ottawa.ini
The same check runs inside the acceptance suite when VIBFAULT_OTTAWA_CONFIG points at the config.
"""
import argparse
import sys

from vibfault.config import load_config
from vibfault.pipeline import StageError, extract, run_features


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("config")
    ap.add_argument("--out")
    args = ap.parse_args()
    cfg = load_config(args.config)
    try:
        X, y, names = extract(cfg)
    except StageError as e:
        print(f"{e}\nsee `vibfault --fetch-instructions` for the expected layout", file=sys.stderr)
        return 2
    rep = run_features(cfg, X, y, names)
    if args.out:
        rep.write(args.out)
    ok = rep.mean_accuracy >= 0.99 and rep.n_selected <= 40
    print(f"{X.shape[0]} windows, accuracy {rep.mean_accuracy:.4f} +- {rep.std_accuracy:.4f}, "
          f"{rep.n_selected} features selected, macro AUC {rep.auc.macro:.4f}: {'PASS' if ok else 'FAIL'}")
    return 0 if ok else 1


if __name__ == "__main__":
    sys.exit(main())

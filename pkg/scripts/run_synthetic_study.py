#!/usr/bin/env python3
"""Run the default synthetic gender study for several seeds and tabulate accuracy.

    python3 scripts/run_synthetic_study.py --seeds 0 1 2 --out runs/study
"""
import argparse
import json
import time
from pathlib import Path

from actionstyle.ingest import StudyConfig
from actionstyle.study import run_study, write_population


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--seeds", type=int, nargs="+", default=[0, 1, 2])
    ap.add_argument("--action", default="walk")
    ap.add_argument("--config", help="base study configuration JSON")
    ap.add_argument("--out", default="runs/study")
    args = ap.parse_args()

    print(f"{'seed':>4} {'lda':>6} {'pca@1':>6} {'pca@10':>6} {'best':>6} {'d*':>3} {'secs':>5}")
    for seed in args.seeds:
        cfg = StudyConfig.load(args.config) if args.config else StudyConfig()
        cfg.seed, cfg.actions = seed, [args.action]
        out = Path(args.out) / f"seed{seed}"
        t0 = time.perf_counter()
        write_population(cfg, out / "data", force=True)
        run_study(out / "data", out, cfg)
        secs = time.perf_counter() - t0
        meta = json.loads((out / "metadata.json").read_text())["actions"][args.action]
        pca = {int(k): v for k, v in meta["pca_accuracy"].items()}
        best = max(pca, key=pca.get)
        print(f"{seed:>4} {meta['lda_accuracy']:6.3f} {pca[1]:6.3f} {pca.get(10, float('nan')):6.3f} "
              f"{pca[best]:6.3f} {best:>3} {secs:5.0f}")


if __name__ == "__main__":
    main()

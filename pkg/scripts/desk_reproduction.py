"""Full selector x classifier grid on the bundled synthetic corpus; prints the AUC table."""

import argparse
import logging
import os
import time
from pathlib import Path

from websift.evaluation import ExperimentConfig, run_experiment
from websift.features import FeatureConfig
from websift.ingest import load_sessions
from websift.learners import CLASSIFIERS, DISPLAY_NAMES
from websift.report import emit_report
from websift.selection import SELECTORS
from websift.synth import PASSTHROUGH

ROOT = Path(__file__).resolve().parents[1]


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--trace", type=Path, default=ROOT / "data" / "synthetic_2000.csv")
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--folds", type=int, default=10)
    ap.add_argument("--jobs", type=int, default=os.cpu_count() or 1)
    ap.add_argument("--out-dir", type=Path, default=Path("desk_out"))
    args = ap.parse_args()
    logging.basicConfig(level=logging.WARNING)

    sessions, _ = load_sessions(args.trace)
    t0 = time.perf_counter()
    cfg = ExperimentConfig(folds=args.folds, seed=args.seed, jobs=args.jobs)
    report = run_experiment(sessions, cfg, FeatureConfig(passthrough=PASSTHROUGH))
    emit_report(report, args.out_dir)

    print(f"{len(sessions)} sessions, {args.folds} folds, {time.perf_counter() - t0:.0f}s")
    print("FS     " + "".join(f"{DISPLAY_NAMES[c]:>18}" for c in CLASSIFIERS))
    for sel in SELECTORS:
        cells = []
        for clf in CLASSIFIERS:
            s = report.summary(sel, clf)
            cells.append(f"{s.mean['auc']:.3f}±{s.std['auc']:.3f}{'*' if s.starred else ' '}")
        print(f"{sel:<7}" + "".join(f"{x:>18}" for x in cells))
    print(f"report files in {args.out_dir}/")


if __name__ == "__main__":
    main()

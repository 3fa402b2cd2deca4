"""Result tables and plot-ready data files for an experiment report."""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from .evaluation import ExperimentReport
from .learners import DISPLAY_NAMES
from .metrics import METRIC_NAMES

SELECTOR_NAMES = {"none": "-", "ig": "IG", "lasso": "LASSO", "rf": "RF"}

REPORT_FILES = ("report.csv", "report.json", "auc_bars.csv", "radar_classifiers.csv", "radar_selectors.csv")


def _mean_pm(mean: float, std: float) -> str:
    return f"{mean:.3f} ± {std:.2f}"


def _num(x: float) -> str:
    return f"{x:.6f}"


def _write_csv(path: Path, header, rows) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


def table_rows(report: ExperimentReport) -> list[list[str]]:
    rows = []
    for sel, clf in report.cells():
        s = report.summary(sel, clf)
        var = s.retained_mean
        rows.append(
            [
                SELECTOR_NAMES.get(sel, sel),
                DISPLAY_NAMES.get(clf, clf) + ("*" if s.starred else ""),
                f"{var:g}" if float(var).is_integer() else f"{var:.1f}",
                *(_mean_pm(s.mean[m], s.std[m]) for m in METRIC_NAMES),
            ]
        )
    return rows


def radar_data(report: ExperimentReport, by: str) -> list[tuple[str, dict[str, float]]]:
    """Per-metric averages of the cell means, grouped by ``"classifier"`` or ``"selector"``."""
    cells = report.cells()
    keys = report.config["classifiers"] if by == "classifier" else report.config["selectors"]
    out = []
    for key in keys:
        members = [(s, c) for s, c in cells if (c if by == "classifier" else s) == key]
        sums = {m: float(np.mean([report.summary(s, c).mean[m] for s, c in members])) for m in METRIC_NAMES}
        out.append((key, sums))
    return out


def emit_report(report: ExperimentReport, out_dir, formats=("csv", "json")) -> list[Path]:
    """Write the results table, fold-level JSON, AUC bar data and both radar tables."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    if "csv" in formats:
        p = out / "report.csv"
        _write_csv(p, ["FS", "Classifier", "Var", "Accuracy", "Precision", "Recall", "F1-Score", "gmean", "AUC"], table_rows(report))
        written.append(p)

        p = out / "auc_bars.csv"
        rows = []
        for sel, clf in report.cells():
            s = report.summary(sel, clf)
            rows.append([sel, clf, _num(s.mean["auc"]), _num(s.std["auc"])])
        _write_csv(p, ["selector", "classifier", "auc_mean", "auc_std"], rows)
        written.append(p)

        for by, name in (("classifier", "radar_classifiers.csv"), ("selector", "radar_selectors.csv")):
            p = out / name
            _write_csv(p, [by, *METRIC_NAMES], [[k, *(_num(v[m]) for m in METRIC_NAMES)] for k, v in radar_data(report, by)])
            written.append(p)
    if "json" in formats:
        p = out / "report.json"
        doc = report.to_dict()
        doc["cells"] = [
            {
                "selector": sel,
                "classifier": clf,
                "retained_mean": s.retained_mean,
                "mean": s.mean,
                "std": s.std,
                "starred": s.starred,
            }
            for sel, clf in report.cells()
            for s in [report.summary(sel, clf)]
        ]
        with open(p, "w", encoding="utf-8") as fh:
            json.dump(doc, fh, indent=2, sort_keys=True)
            fh.write("\n")
        written.append(p)
    return written

import csv
import json

from websift.evaluation import ExperimentConfig, run_experiment
from websift.report import REPORT_FILES, emit_report, radar_data, table_rows

from conftest import fast_hyperparameters


def test_report_files(small_sessions, tmp_path):
    rep = run_experiment(small_sessions, ExperimentConfig(selectors=("none", "ig"), classifiers=("lasso", "rf"), folds=3,
                                                          hyperparameters=fast_hyperparameters()))
    written = emit_report(rep, tmp_path)
    assert sorted(p.name for p in written) == sorted(REPORT_FILES)
    rows = list(csv.reader(open(tmp_path / "report.csv")))
    assert rows[0] == ["FS", "Classifier", "Var", "Accuracy", "Precision", "Recall", "F1-Score", "gmean", "AUC"]
    assert [r[0] for r in rows[1:]] == ["-", "-", "IG", "IG"]
    assert all("±" in c for r in rows[1:] for c in r[3:])
    doc = json.loads((tmp_path / "report.json").read_text())
    assert len(doc["folds"]) == 12 and len(doc["cells"]) == 4
    assert len(table_rows(rep)) == 4
    by_clf = dict(radar_data(rep, "classifier"))
    assert set(by_clf) == {"lasso", "rf"}
    bars = list(csv.DictReader(open(tmp_path / "auc_bars.csv")))
    assert {b["classifier"] for b in bars} == {"lasso", "rf"}

"""Command-line entry point: ``websift <command> [options]``.

Every command writes only inside ``--out-dir``. Exit codes: 0 success,
1 pipeline error, 2 schema or parameter error, 3 leakage-audit failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .config import RunConfig, load_config, save_config
from .errors import LeakageError, ParameterError, SchemaError, WebsiftError
from .evaluation import run_experiment
from .features import (
    Dataset,
    FeatureConfig,
    build_vocabulary,
    encode_sessions,
    read_dataset,
    read_manifest,
    write_dataset,
    write_manifest,
)
from .ingest import ColumnMap, Session, corpus_statistics, group_sessions, parse_trace_file
from .learners import CLASSIFIERS, Hyperparameters, make_classifier, model_from_dict
from .metrics import compute_metrics
from .report import emit_report
from .selection import DEFAULT_BINS, LASSO_THRESHOLD, select_features
from .synth import write_trace_file
from .tuning import TuneGrid, best_points, tune

logger = logging.getLogger("websift")

EXIT_OK, EXIT_ERROR, EXIT_SCHEMA, EXIT_LEAKAGE = 0, 1, 2, 3


def _csv_list(text: str | None) -> list[str] | None:
    if text is None:
        return None
    return [t.strip() for t in text.split(",") if t.strip()]


def _num_list(kind):
    def parse(text: str):
        return [kind(t) for t in _csv_list(text)]
    return parse


def _write_json(path: Path, doc) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _out(args) -> Path:
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _seed(args) -> int:
    return RunConfig(seed=args.seed).resolved_seed()


def load_trace_sessions(paths, format="csv", columns=None, delimiter=",", label_rule="any-attack"):
    """Parse one or more trace files and group their records into sessions."""
    schema = ColumnMap.parse(columns or None)
    records, failures = [], []
    for path in paths:
        try:
            with open(path, "rb") as fh:
                parsed = parse_trace_file(fh, format=format, schema=schema, delimiter=delimiter)
        except SchemaError as exc:
            raise SchemaError(f"{path}: {exc}") from exc
        except OSError as exc:
            raise WebsiftError(f"{path}: {exc.strerror or exc}") from exc
        for f in parsed.failures:
            logger.warning("%s:%d: skipped row: %s", path, f.line, f.reason)
        records.extend(parsed.records)
        failures.extend((str(path), f.line, f.reason) for f in parsed.failures)
    rejected: list[str] = []
    sessions = group_sessions(records, label_rule, rejected)
    return sessions, failures, rejected


# -- commands --------------------------------------------------------------

def cmd_synth(args) -> int:
    out = _out(args)
    path = out / args.name
    n_rows = write_trace_file(path, args.sessions, args.attack_fraction, _seed(args))
    n_attack = int(round(args.sessions * args.attack_fraction))
    logger.info("wrote %s: %d sessions (%d attacks), %d requests", path, args.sessions, n_attack, n_rows)
    print(path)
    return EXIT_OK


def _check_manifest_against(sessions: list[Session], vocab, passthrough) -> None:
    if passthrough is not None and tuple(passthrough) != tuple(vocab.passthrough_names):
        raise SchemaError(
            f"schema fingerprint mismatch: manifest passthrough {list(vocab.passthrough_names)} vs requested {passthrough}"
        )
    for s in sessions[:1]:
        absent = [n for n in vocab.passthrough_names if n not in s.extras]
        if absent:
            raise SchemaError(f"schema fingerprint mismatch: data lacks manifest column(s) {absent}")


def cmd_extract(args) -> int:
    out = _out(args)
    passthrough = _csv_list(args.passthrough)
    sessions, failures, rejected = load_trace_sessions(args.inputs, args.format, args.map, args.delimiter, args.label_rule)
    if args.vocab_in:
        vocab, fconf = read_manifest(args.vocab_in)
        _check_manifest_against(sessions, vocab, passthrough)
        if args.url_base:
            fconf = FeatureConfig(args.url_base, fconf.passthrough)
    else:
        fconf = FeatureConfig(args.url_base or FeatureConfig().url_base, tuple(passthrough or ()))
        vocab = build_vocabulary(sessions, fconf)
    if not sessions:
        logger.warning("no sessions in input; writing an empty dataset")
    data, diagnostics = encode_sessions(sessions, vocab, fconf)
    write_dataset(out / "dataset.csv", data)
    write_manifest(out / "vocabulary.json", vocab, fconf)
    stats = corpus_statistics(sessions)
    _write_json(
        out / "extract_summary.json",
        {
            "sessions": stats.sessions,
            "normal": stats.normal,
            "attack": stats.attack,
            "width": vocab.width,
            "fingerprint": vocab.fingerprint(),
            "parse_failures": [{"file": f, "line": ln, "reason": r} for f, ln, r in failures],
            "rejected_sessions": rejected,
            "diagnostics": dict(sorted(diagnostics.items())),
        },
    )
    logger.info("%d sessions x %d features -> %s", len(data), vocab.width, out / "dataset.csv")
    return EXIT_OK


def _load_dataset(args) -> Dataset:
    expected = None
    if getattr(args, "manifest", None):
        expected = read_manifest(args.manifest)[0].fingerprint()
    return read_dataset(args.dataset, expected_fingerprint=expected)


def cmd_select(args) -> int:
    out = _out(args)
    data = _load_dataset(args)
    hp = Hyperparameters()
    sel = select_features(args.method, data.X, data.y, data.columns, seed=_seed(args), bins=args.bins,
                          lasso_threshold=args.lasso_threshold, hp=hp)
    doc = sel.to_dict()
    doc["schema_fingerprint"] = data.fingerprint()
    _write_json(out / f"selection_{args.method}.json", doc)
    logger.info("%s retained %d of %d features", args.method, int(sel.mask.sum()), len(data.columns))
    return EXIT_OK


def _selected_columns(args, data) -> list[str]:
    if not args.selection:
        return list(data.columns)
    with open(args.selection, encoding="utf-8") as fh:
        doc = json.load(fh)
    if doc.get("schema_fingerprint") not in (None, data.fingerprint()):
        raise SchemaError(f"{args.selection}: schema fingerprint mismatch with {args.dataset}")
    return [f["name"] for f in doc["features"] if f["retained"]]


def cmd_train(args) -> int:
    out = _out(args)
    data = _load_dataset(args)
    cols = _selected_columns(args, data)
    mask = np.array([c in set(cols) for c in data.columns])
    hp = load_config(args.config).hyperparameters if args.config else Hyperparameters()
    model = make_classifier(args.classifier, hp, _seed(args)).fit(data.X[:, mask], data.y)
    _write_json(
        out / f"model_{args.classifier}.json",
        {"schema_fingerprint": data.fingerprint(), "columns": [c for c, m in zip(data.columns, mask) if m],
         "model": model.to_dict()},
    )
    logger.info("trained %s on %d rows x %d features", args.classifier, len(data), int(mask.sum()))
    return EXIT_OK


def cmd_score(args) -> int:
    out = _out(args)
    data = _load_dataset(args)
    with open(args.model, encoding="utf-8") as fh:
        doc = json.load(fh)
    if doc.get("schema_fingerprint") != data.fingerprint():
        raise SchemaError(
            f"schema fingerprint mismatch: model {doc.get('schema_fingerprint')} vs dataset {data.fingerprint()}"
        )
    model = model_from_dict(doc["model"])
    idx = [data.columns.index(c) for c in doc["columns"]]
    X = data.X[:, idx]
    proba = model.predict_proba(X) if len(data) else np.zeros(0)
    with open(out / "scores.csv", "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["session_id", "score", "label"])
        w.writerows([sid, f"{p:.6f}", int(y)] for sid, p, y in zip(data.ids, proba, data.y))
    if len(data):
        m = compute_metrics(proba, data.y, ranking=model.decision_function(X))
        _write_json(out / "metrics.json", m.as_dict())
    return EXIT_OK


def _run_config(args) -> RunConfig:
    cfg = load_config(args.config) if args.config else RunConfig()
    return cfg.with_overrides(
        inputs=args.inputs or None,
        format=args.format,
        columns=dict(ColumnMap.parse(args.map).as_dict()) if args.map else None,
        delimiter=args.delimiter,
        url_base=args.url_base,
        passthrough=_csv_list(args.passthrough),
        label_rule=args.label_rule,
        selectors=_csv_list(args.selectors),
        classifiers=_csv_list(args.classifiers),
        folds=args.folds,
        seed=args.seed,
        out_dir=args.out_dir,
        jobs=args.jobs,
    )


def cmd_run(args) -> int:
    cfg = _run_config(args)
    if not cfg.inputs:
        raise ParameterError("no input trace given (positional INPUT or 'inputs' in the config)")
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    sessions, _, _ = load_trace_sessions(cfg.inputs, cfg.format, cfg.columns, cfg.delimiter, cfg.label_rule)
    report = run_experiment(sessions, cfg.experiment_config(), cfg.feature_config())
    save_config(cfg, out / "config_snapshot.json")
    for p in emit_report(report, out):
        logger.info("wrote %s", p)
    return EXIT_OK


def cmd_tune(args) -> int:
    out = _out(args)
    data = _load_dataset(args)
    grid = TuneGrid()
    for name in ("svm_gamma", "svm_cost", "knn_k", "rf_mtry"):
        value = getattr(args, name)
        if value is not None:
            setattr(grid, name, value)
    points = tune(data, grid, subset_fraction=args.subset_fraction, folds=args.folds, seed=_seed(args),
                  classifiers=tuple(_csv_list(args.classifiers)))
    with open(out / "tune.csv", "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["classifier", "params", "auc_mean", "auc_std"])
        for p in points:
            w.writerow([p.classifier, json.dumps(p.params, sort_keys=True), f"{p.auc_mean:.6f}", f"{p.auc_std:.6f}"])
    _write_json(
        out / "tune.json",
        {"subset_fraction": args.subset_fraction, "folds": args.folds, "seed": _seed(args),
         "points": [p.to_dict() for p in points],
         "best": {k: v.to_dict() for k, v in best_points(points).items()}},
    )
    return EXIT_OK


# -- parser ----------------------------------------------------------------

def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--seed", type=int, default=None, help="random seed (default: $WEBSIFT_SEED or 0)")
    p.add_argument("--jobs", type=int, default=None, help="worker processes for independent folds (default: all cores)")
    p.add_argument("--out-dir", default="out", help="directory receiving every output file")


def _add_trace_options(p: argparse.ArgumentParser, defaults: bool) -> None:
    d = (lambda v: v) if defaults else (lambda v: None)
    p.add_argument("--format", choices=("csv", "jsonl"), default=d("csv"))
    p.add_argument("--map", default=None, help="column mapping, e.g. 'method=Method,url=URL,cookie=Cookie'")
    p.add_argument("--delimiter", default=d(","))
    p.add_argument("--label-rule", choices=("any-attack", "majority", "unanimous-else-reject"), default=d("any-attack"))
    p.add_argument("--url-base", default=None, help="URL prefix treated as the application root")
    p.add_argument("--passthrough", default=None, help="comma-separated trace columns carried into the features")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="websift", description="Web-attack session classification pipeline")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="write a synthetic labelled trace")
    _add_common(p)
    p.add_argument("--sessions", type=int, default=2000)
    p.add_argument("--attack-fraction", type=float, default=0.683)
    p.add_argument("--name", default="trace.csv")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("extract", help="trace file(s) -> session feature dataset + vocabulary manifest")
    _add_common(p)
    p.add_argument("inputs", nargs="+")
    _add_trace_options(p, defaults=True)
    p.add_argument("--vocab-in", default=None, help="reuse a vocabulary manifest instead of fitting one")
    p.set_defaults(func=cmd_extract)

    p = sub.add_parser("select", help="score and select features of a dataset")
    _add_common(p)
    p.add_argument("dataset")
    p.add_argument("--method", choices=("ig", "lasso", "rf"), required=True)
    p.add_argument("--bins", type=int, default=DEFAULT_BINS)
    p.add_argument("--lasso-threshold", type=float, default=LASSO_THRESHOLD)
    p.add_argument("--manifest", default=None, help="vocabulary manifest the dataset must match")
    p.set_defaults(func=cmd_select)

    p = sub.add_parser("train", help="fit one classifier and save it as JSON")
    _add_common(p)
    p.add_argument("dataset")
    p.add_argument("--classifier", choices=CLASSIFIERS, required=True)
    p.add_argument("--selection", default=None, help="selection JSON restricting the columns")
    p.add_argument("--config", default=None, help="run config supplying hyperparameters")
    p.add_argument("--manifest", default=None)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("score", help="score a dataset with a saved model")
    _add_common(p)
    p.add_argument("dataset")
    p.add_argument("--model", required=True)
    p.add_argument("--manifest", default=None)
    p.set_defaults(func=cmd_score)

    p = sub.add_parser("run", help="cross-validated selector x classifier experiment")
    _add_common(p)
    p.add_argument("inputs", nargs="*")
    p.add_argument("--config", default=None, help="YAML or JSON run config; flags override it")
    _add_trace_options(p, defaults=False)
    p.add_argument("--selectors", default=None, help="comma list from none,ig,lasso,rf")
    p.add_argument("--classifiers", default=None, help="comma list from lasso,knn,svm,rf,boost")
    p.add_argument("--folds", type=int, default=None)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("tune", help="hyperparameter AUC surface on a random subset")
    _add_common(p)
    p.add_argument("dataset")
    p.add_argument("--subset-fraction", type=float, default=0.2)
    p.add_argument("--folds", type=int, default=5)
    p.add_argument("--classifiers", default="svm,knn,rf")
    p.add_argument("--svm-gamma", type=_num_list(float), default=None)
    p.add_argument("--svm-cost", type=_num_list(float), default=None)
    p.add_argument("--knn-k", type=_num_list(int), default=None)
    p.add_argument("--rf-mtry", type=_num_list(int), default=None)
    p.add_argument("--manifest", default=None)
    p.set_defaults(func=cmd_tune)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose > 1 else logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    if getattr(args, "jobs", None) is None and args.command != "run":
        args.jobs = 1
    try:
        return args.func(args)
    except LeakageError as exc:
        print(f"websift: leakage audit failed: {exc}", file=sys.stderr)
        return EXIT_LEAKAGE
    except (SchemaError, ParameterError, ValueError) as exc:
        print(f"websift: {exc}", file=sys.stderr)
        return EXIT_SCHEMA
    except WebsiftError as exc:
        print(f"websift: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())

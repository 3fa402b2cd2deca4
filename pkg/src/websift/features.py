"""Session feature schema: method one-hot, payload key/length block, URL block
and passthrough columns."""

from __future__ import annotations

import csv
import hashlib
import json
import math
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import SchemaError
from .ingest import Session

DEFAULT_URL_BASE = "http://localhost:8080/"
MANIFEST_VERSION = 1


@dataclass(frozen=True)
class FeatureConfig:
    url_base: str = DEFAULT_URL_BASE
    passthrough: tuple[str, ...] = ()

    def to_dict(self) -> dict:
        return {"url_base": self.url_base, "passthrough": list(self.passthrough)}

    @classmethod
    def from_dict(cls, d: Mapping) -> "FeatureConfig":
        return cls(url_base=d.get("url_base", DEFAULT_URL_BASE), passthrough=tuple(d.get("passthrough", ())))


@dataclass(frozen=True)
class FeatureVocabulary:
    """Corpus-derived tokens that fix the column layout.

    ``passthrough_categories`` maps each non-numeric passthrough variable to
    its fit-time categories; numeric passthroughs are absent from it.
    """

    payload_keys: tuple[str, ...] = ()
    url_extensions: tuple[str, ...] = ()
    method_values: tuple[str, ...] = ()
    passthrough_names: tuple[str, ...] = ()
    passthrough_categories: Mapping[str, tuple[str, ...]] = field(default_factory=dict)

    def column_names(self) -> list[str]:
        cols = [f"method.{m}" for m in self.method_values]
        cols += [f"key.{k}" for k in self.payload_keys]
        cols += [f"length.{k}" for k in self.payload_keys]
        cols += ["num.keys", "total.length"]
        cols += [f"ext.{e}" for e in self.url_extensions]
        cols += ["isValidURL", "numDir", "lengthDir", "lengthFile"]
        for name in self.passthrough_names:
            cats = self.passthrough_categories.get(name)
            if cats is None:
                cols.append(name)
            else:
                cols += [f"{name}={c}" for c in cats]
        return cols

    @property
    def width(self) -> int:
        return len(self.column_names())

    def fingerprint(self) -> str:
        return schema_fingerprint(self.column_names())

    def to_dict(self) -> dict:
        return {
            "payload_keys": list(self.payload_keys),
            "url_extensions": list(self.url_extensions),
            "method_values": list(self.method_values),
            "passthrough_names": list(self.passthrough_names),
            "passthrough_categories": {k: list(v) for k, v in sorted(self.passthrough_categories.items())},
        }

    @classmethod
    def from_dict(cls, d: Mapping) -> "FeatureVocabulary":
        return cls(
            payload_keys=tuple(d.get("payload_keys", ())),
            url_extensions=tuple(d.get("url_extensions", ())),
            method_values=tuple(d.get("method_values", ())),
            passthrough_names=tuple(d.get("passthrough_names", ())),
            passthrough_categories={k: tuple(v) for k, v in d.get("passthrough_categories", {}).items()},
        )


def schema_fingerprint(columns: Sequence[str]) -> str:
    return hashlib.sha256("\n".join(columns).encode("utf-8")).hexdigest()[:16]


# -- payload ---------------------------------------------------------------

def payload_pairs(full_payload: str) -> list[tuple[str, str]]:
    """``Key=Value`` pairs in order; fragments without ``=`` or with an empty key are dropped."""
    pairs = []
    for fragment in full_payload.split("&"):
        if "=" not in fragment:
            continue
        key, value = fragment.split("=", 1)
        if key:
            pairs.append((key, value))
    return pairs


def extract_payload_features(full_payload: str, vocab: FeatureVocabulary, diagnostics: Counter | None = None) -> np.ndarray:
    """Block of ``key.*`` presences, ``length.*`` value lengths, ``num.keys`` and ``total.length``.

    Repeated keys sum their value lengths. Keys outside the vocabulary add
    only to ``total.length``.
    """
    keys = vocab.payload_keys
    n = len(keys)
    index = {k: i for i, k in enumerate(keys)}
    block = np.zeros(2 * n + 2)
    total = 0
    for key, value in payload_pairs(full_payload):
        total += len(value)
        i = index.get(key)
        if i is None:
            if diagnostics is not None:
                diagnostics["unseen_key"] += 1
            continue
        block[i] = 1.0
        block[n + i] += len(value)
    block[2 * n] = block[:n].sum()
    block[2 * n + 1] = total
    return block


# -- URL -------------------------------------------------------------------

@dataclass(frozen=True)
class UrlParts:
    directories: tuple[str, ...]
    filename: str
    extension: str


def strip_url(url: str) -> str:
    """Drop a trailing ``HTTP/x.y`` protocol token, the query string and any fragment."""
    url = url.strip()
    head, sep, tail = url.rpartition(" ")
    if sep and tail.upper().startswith("HTTP/"):
        url = head.rstrip()
    for mark in ("?", "#"):
        url = url.split(mark, 1)[0]
    return url


def parse_url(url: str, base: str = DEFAULT_URL_BASE) -> UrlParts | None:
    """Split a URL under ``base`` into directories and a resource file; ``None`` if invalid."""
    url = strip_url(url)
    if not url.startswith(base):
        return None
    segments = url[len(base):].split("/")
    *dirs, last = segments
    if any(not d for d in dirs) or "." not in last:
        return None
    stem, ext = last.rsplit(".", 1)
    if not ext:
        return None
    return UrlParts(tuple(dirs), stem, ext.lower())


def extract_url_features(
    url: str, vocab: FeatureVocabulary, base: str = DEFAULT_URL_BASE, diagnostics: Counter | None = None
) -> np.ndarray:
    """Block of extension one-hots followed by isValidURL, numDir, lengthDir, lengthFile."""
    exts = vocab.url_extensions
    block = np.zeros(len(exts) + 4)
    parts = parse_url(url, base)
    if parts is None:
        return block
    try:
        block[exts.index(parts.extension)] = 1.0
    except ValueError:
        if diagnostics is not None:
            diagnostics["unseen_extension"] += 1
    m = len(exts)
    block[m] = 1.0
    block[m + 1] = len(parts.directories)
    block[m + 2] = sum(len(d) for d in parts.directories)
    block[m + 3] = len(parts.filename)
    return block


def encode_method(method: str, vocab: FeatureVocabulary, diagnostics: Counter | None = None) -> np.ndarray:
    block = np.zeros(len(vocab.method_values))
    try:
        block[vocab.method_values.index(method)] = 1.0
    except ValueError:
        if diagnostics is not None:
            diagnostics["unseen_method"] += 1
    return block


# -- passthrough -----------------------------------------------------------

def _as_number(value: object) -> float | None:
    if value is None or isinstance(value, bool):
        return None if value is None else float(value)
    if isinstance(value, (int, float)):
        return float(value) if math.isfinite(value) else None
    text = str(value).strip()
    if not text:
        return None
    try:
        x = float(text)
    except ValueError:
        return None
    return x if math.isfinite(x) else None


def _is_missing(value: object) -> bool:
    return value is None or (isinstance(value, str) and not value.strip())


def encode_passthrough(extras: Mapping[str, object], vocab: FeatureVocabulary, diagnostics: Counter | None = None) -> np.ndarray:
    out: list[float] = []
    for name in vocab.passthrough_names:
        value = extras.get(name)
        cats = vocab.passthrough_categories.get(name)
        if _is_missing(value) and diagnostics is not None:
            diagnostics[f"missing_passthrough:{name}"] += 1
        if cats is None:
            x = _as_number(value)
            if x is None and not _is_missing(value) and diagnostics is not None:
                diagnostics[f"non_numeric_passthrough:{name}"] += 1
            out.append(0.0 if x is None else x)
        else:
            token = "" if _is_missing(value) else str(value).strip()
            out.extend(1.0 if token == c else 0.0 for c in cats)
    return np.asarray(out, dtype=float)


# -- vocabulary and sessions -----------------------------------------------

def build_vocabulary(sessions: Iterable[Session], config: FeatureConfig = FeatureConfig()) -> FeatureVocabulary:
    keys: set[str] = set()
    exts: set[str] = set()
    methods: set[str] = set()
    raw_pass: dict[str, list[object]] = {name: [] for name in config.passthrough}
    for s in sessions:
        methods.add(s.method)
        keys.update(k for k, _ in payload_pairs(s.full_payload))
        parts = parse_url(s.url, config.url_base)
        if parts is not None:
            exts.add(parts.extension)
        for name in config.passthrough:
            raw_pass[name].append(s.extras.get(name))

    categories = {}
    for name, values in raw_pass.items():
        present = [v for v in values if not _is_missing(v)]
        if any(_as_number(v) is None for v in present):
            categories[name] = tuple(sorted({str(v).strip() for v in present}))
    return FeatureVocabulary(
        payload_keys=tuple(sorted(keys)),
        url_extensions=tuple(sorted(exts)),
        method_values=tuple(sorted(methods)),
        passthrough_names=tuple(config.passthrough),
        passthrough_categories=categories,
    )


def encode_session(
    session: Session, vocab: FeatureVocabulary, config: FeatureConfig = FeatureConfig(), diagnostics: Counter | None = None
) -> np.ndarray:
    return np.concatenate(
        [
            encode_method(session.method, vocab, diagnostics),
            extract_payload_features(session.full_payload, vocab, diagnostics),
            extract_url_features(session.url, vocab, config.url_base, diagnostics),
            encode_passthrough(session.extras, vocab, diagnostics),
        ]
    )


@dataclass
class Dataset:
    """Dense session-by-feature matrix with binary labels (1 = attack)."""

    X: np.ndarray
    y: np.ndarray
    columns: list[str]
    ids: list[str] = field(default_factory=list)

    def __post_init__(self):
        self.X = np.asarray(self.X, dtype=float).reshape(len(self.y), len(self.columns))
        self.y = np.asarray(self.y, dtype=np.int64)
        if not self.ids:
            self.ids = [str(i) for i in range(len(self.y))]
        if len(self.ids) != len(self.y):
            raise SchemaError("row ids and labels differ in length")

    def __len__(self) -> int:
        return len(self.y)

    def subset(self, rows) -> "Dataset":
        rows = np.asarray(rows)
        return Dataset(self.X[rows], self.y[rows], list(self.columns), [self.ids[i] for i in rows])

    def select_columns(self, mask) -> "Dataset":
        mask = np.asarray(mask, dtype=bool)
        return Dataset(self.X[:, mask], self.y, [c for c, m in zip(self.columns, mask) if m], list(self.ids))

    def fingerprint(self) -> str:
        return schema_fingerprint(self.columns)


def encode_sessions(
    sessions: Sequence[Session], vocab: FeatureVocabulary, config: FeatureConfig = FeatureConfig()
) -> tuple[Dataset, Counter]:
    diagnostics: Counter = Counter()
    cols = vocab.column_names()
    X = np.zeros((len(sessions), len(cols)))
    for i, s in enumerate(sessions):
        X[i] = encode_session(s, vocab, config, diagnostics)
    y = np.array([s.label for s in sessions], dtype=np.int64)
    return Dataset(X, y, cols, [s.session_id for s in sessions]), diagnostics


class SessionEncoder:
    """Fit-on-train / transform-anywhere wrapper around the vocabulary."""

    def __init__(self, config: FeatureConfig = FeatureConfig(), vocabulary: FeatureVocabulary | None = None):
        self.config = config
        self.vocabulary = vocabulary

    def fit(self, sessions: Sequence[Session]) -> "SessionEncoder":
        self.vocabulary = build_vocabulary(sessions, self.config)
        return self

    def transform(self, sessions: Sequence[Session]) -> Dataset:
        if self.vocabulary is None:
            raise RuntimeError("encoder is not fitted")
        return encode_sessions(sessions, self.vocabulary, self.config)[0]


# -- files -----------------------------------------------------------------

def write_manifest(path, vocab: FeatureVocabulary, config: FeatureConfig) -> None:
    doc = {
        "version": MANIFEST_VERSION,
        "config": config.to_dict(),
        "vocabulary": vocab.to_dict(),
        "columns": vocab.column_names(),
        "fingerprint": vocab.fingerprint(),
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")


def read_manifest(path) -> tuple[FeatureVocabulary, FeatureConfig]:
    """Load a vocabulary manifest, checking its stored fingerprint against its own vocabulary."""
    with open(path, encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise SchemaError(f"{path}: manifest is not valid JSON ({exc.msg})") from exc
    try:
        vocab = FeatureVocabulary.from_dict(doc["vocabulary"])
        config = FeatureConfig.from_dict(doc.get("config", {}))
        stored = doc["fingerprint"]
    except (KeyError, TypeError) as exc:
        raise SchemaError(f"{path}: manifest is missing {exc}") from exc
    if stored != vocab.fingerprint() or doc.get("columns", vocab.column_names()) != vocab.column_names():
        raise SchemaError(f"{path}: schema fingerprint mismatch (stored {stored}, computed {vocab.fingerprint()})")
    return vocab, config


def _fmt(x: float) -> str:
    return str(int(x)) if float(x).is_integer() else repr(float(x))


def write_dataset(path, data: Dataset, delimiter: str = ",") -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, delimiter=delimiter, lineterminator="\n")
        w.writerow(["session_id", *data.columns, "label"])
        for sid, row, label in zip(data.ids, data.X, data.y):
            w.writerow([sid, *map(_fmt, row), int(label)])


def read_dataset(path, delimiter: str = ",", expected_fingerprint: str | None = None) -> Dataset:
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh, delimiter=delimiter)
        header = next(reader, None)
        if header is None or len(header) < 2 or header[0] != "session_id" or header[-1] != "label":
            raise SchemaError(f"{path}: expected header 'session_id,...,label'")
        columns = header[1:-1]
        ids, rows, labels = [], [], []
        for row in reader:
            if not row:
                continue
            if len(row) != len(header):
                raise SchemaError(f"{path}:{reader.line_num}: expected {len(header)} fields, got {len(row)}")
            ids.append(row[0])
            rows.append([float(v) for v in row[1:-1]])
            labels.append(int(row[-1]))
    data = Dataset(np.array(rows).reshape(len(rows), len(columns)), np.array(labels), columns, ids)
    if expected_fingerprint is not None and data.fingerprint() != expected_fingerprint:
        raise SchemaError(
            f"{path}: schema fingerprint mismatch (data {data.fingerprint()}, manifest {expected_fingerprint})"
        )
    return data

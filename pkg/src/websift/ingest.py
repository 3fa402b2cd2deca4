"""Reading HTTP trace files and grouping requests into cookie sessions."""

from __future__ import annotations

import csv
import io
import json
import logging
from collections import Counter
from dataclasses import dataclass, field
from typing import IO, Iterable, Mapping, Sequence

from .errors import SchemaError

logger = logging.getLogger(__name__)

NORMAL, ATTACK = 0, 1

LABEL_RULES = ("any-attack", "majority", "unanimous-else-reject")
MANDATORY = ("method", "url", "payload", "cookie", "label")

DEFAULT_LABEL_TOKENS = {
    "normal": NORMAL,
    "valid": NORMAL,
    "norm": NORMAL,
    "0": NORMAL,
    "attack": ATTACK,
    "anomalous": ATTACK,
    "anomaly": ATTACK,
    "1": ATTACK,
}


@dataclass(frozen=True)
class RawHttpRecord:
    method: str
    url: str
    payload: str
    cookie: str
    label: int
    extras: Mapping[str, object] = field(default_factory=dict)
    line: int = 0

    def __post_init__(self):
        if not self.method:
            raise ValueError("method must be non-empty")
        if self.label not in (NORMAL, ATTACK):
            raise ValueError(f"label must be 0 or 1, got {self.label!r}")


@dataclass(frozen=True)
class Session:
    session_id: str
    records: tuple[RawHttpRecord, ...]
    full_payload: str
    label: int

    @property
    def method(self) -> str:
        return self.records[0].method

    @property
    def url(self) -> str:
        return self.records[0].url

    @property
    def extras(self) -> Mapping[str, object]:
        return self.records[0].extras


@dataclass(frozen=True)
class ParseFailure:
    line: int
    reason: str


@dataclass
class TraceParseResult:
    records: list[RawHttpRecord]
    failures: list[ParseFailure]


@dataclass(frozen=True)
class ColumnMap:
    """Names of the source columns holding each mandatory field."""

    method: str = "method"
    url: str = "url"
    payload: str = "payload"
    cookie: str = "cookie"
    label: str = "label"

    @classmethod
    def parse(cls, spec: str | Mapping[str, str] | None) -> "ColumnMap":
        """Build from ``"method=Method,url=URL,..."`` or a mapping; unnamed fields keep defaults."""
        if spec is None:
            return cls()
        if isinstance(spec, str):
            pairs = {}
            for item in filter(None, (s.strip() for s in spec.split(","))):
                if "=" not in item:
                    raise SchemaError(f"bad column mapping entry {item!r}")
                k, v = item.split("=", 1)
                pairs[k.strip()] = v.strip()
            spec = pairs
        unknown = set(spec) - set(MANDATORY)
        if unknown:
            raise SchemaError(f"unknown mapping fields: {sorted(unknown)}")
        return cls(**dict(spec))

    def as_dict(self) -> dict[str, str]:
        return {name: getattr(self, name) for name in MANDATORY}


def _label_of(token: object, tokens: Mapping[str, int], line: int) -> int:
    key = str(token).strip().lower()
    if key not in tokens:
        raise SchemaError(f"line {line}: unknown label token {token!r}")
    return tokens[key]


def _build_record(row: Mapping[str, object], schema: ColumnMap, tokens, line: int) -> RawHttpRecord:
    cols = schema.as_dict()
    method = str(row[cols["method"]] or "").strip()
    if not method:
        raise ValueError("empty method")
    payload = row[cols["payload"]]
    cookie = row[cols["cookie"]]
    mapped = set(cols.values())
    extras = {k: v for k, v in row.items() if k not in mapped}
    return RawHttpRecord(
        method=method,
        url=str(row[cols["url"]] or ""),
        payload="" if payload is None else str(payload),
        cookie="" if cookie is None else str(cookie),
        label=_label_of(row[cols["label"]], tokens, line),
        extras=extras,
        line=line,
    )


def parse_trace_file(
    source: IO[bytes] | IO[str],
    format: str = "csv",
    schema: ColumnMap | None = None,
    delimiter: str = ",",
    label_tokens: Mapping[str, int] | None = None,
) -> TraceParseResult:
    """Parse a delimited-text (``csv``) or ``jsonl`` trace into records.

    Rows that cannot be parsed are collected as :class:`ParseFailure` with
    their 1-based line number. A header lacking a mapped column, or a label
    token outside ``label_tokens``, raises :class:`SchemaError`.
    """
    schema = schema or ColumnMap()
    tokens = {k.lower(): v for k, v in (label_tokens or DEFAULT_LABEL_TOKENS).items()}
    data = source.read()
    if isinstance(data, bytes):
        data = data.decode("utf-8")
    if data.startswith("\ufeff"):
        data = data[1:]

    if format in ("csv", "delimited", "delimited-text"):
        return _parse_delimited(data, schema, tokens, delimiter)
    if format in ("jsonl", "json-lines"):
        return _parse_jsonl(data, schema, tokens)
    raise SchemaError(f"unsupported trace format {format!r}")


def _parse_delimited(text: str, schema: ColumnMap, tokens, delimiter: str) -> TraceParseResult:
    records: list[RawHttpRecord] = []
    failures: list[ParseFailure] = []
    reader = csv.reader(io.StringIO(text, newline=""), delimiter=delimiter)
    try:
        header = next(reader)
    except StopIteration:
        return TraceParseResult(records, failures)
    missing = [c for c in schema.as_dict().values() if c not in header]
    if missing:
        raise SchemaError(f"missing mandatory column(s): {missing}")

    while True:
        line = reader.line_num + 1
        try:
            row = next(reader)
        except StopIteration:
            break
        except csv.Error as exc:
            failures.append(ParseFailure(line, str(exc)))
            continue
        if not row:
            continue
        if len(row) != len(header):
            failures.append(ParseFailure(line, f"expected {len(header)} fields, got {len(row)}"))
            continue
        try:
            records.append(_build_record(dict(zip(header, row)), schema, tokens, line))
        except ValueError as exc:
            failures.append(ParseFailure(line, str(exc)))
    return TraceParseResult(records, failures)


def _parse_jsonl(text: str, schema: ColumnMap, tokens) -> TraceParseResult:
    records: list[RawHttpRecord] = []
    failures: list[ParseFailure] = []
    wanted = list(schema.as_dict().values())
    for line, raw in enumerate(text.splitlines(), start=1):
        if not raw.strip():
            continue
        try:
            row = json.loads(raw)
        except json.JSONDecodeError as exc:
            failures.append(ParseFailure(line, f"invalid JSON: {exc.msg}"))
            continue
        if not isinstance(row, dict):
            failures.append(ParseFailure(line, "row is not a JSON object"))
            continue
        absent = [c for c in wanted if c not in row]
        if absent:
            failures.append(ParseFailure(line, f"missing field(s) {absent}"))
            continue
        try:
            records.append(_build_record(row, schema, tokens, line))
        except ValueError as exc:
            failures.append(ParseFailure(line, str(exc)))
    return TraceParseResult(records, failures)


def join_payloads(payloads: Iterable[str]) -> str:
    return "&".join(p for p in payloads if p)


def resolve_label(labels: Sequence[int], rule: str = "any-attack") -> int | None:
    """Session label from member labels; ``None`` means the session is rejected."""
    n_attack = sum(labels)
    if rule == "any-attack":
        return ATTACK if n_attack else NORMAL
    if rule == "majority":
        # ties go to attack
        return ATTACK if 2 * n_attack >= len(labels) else NORMAL
    if rule == "unanimous-else-reject":
        if n_attack == 0:
            return NORMAL
        if n_attack == len(labels):
            return ATTACK
        return None
    raise ValueError(f"unknown label rule {rule!r}; expected one of {LABEL_RULES}")


def group_sessions(
    records: Iterable[RawHttpRecord],
    label_rule: str = "any-attack",
    rejected: list | None = None,
) -> list[Session]:
    """Group records by cookie, in order of first appearance.

    Records with an empty cookie each become a singleton session. Sessions
    rejected by ``unanimous-else-reject`` are logged and appended to
    ``rejected`` when a list is given.
    """
    if label_rule not in LABEL_RULES:
        raise ValueError(f"unknown label rule {label_rule!r}; expected one of {LABEL_RULES}")
    groups: dict[str, list[RawHttpRecord]] = {}
    for i, rec in enumerate(records):
        key = rec.cookie if rec.cookie else f"\x00{i}"
        groups.setdefault(key, []).append(rec)

    sessions = []
    n_rejected = 0
    for key, members in groups.items():
        label = resolve_label([r.label for r in members], label_rule)
        sid = f"~{key[1:]}" if key.startswith("\x00") else key
        if label is None:
            n_rejected += 1
            if rejected is not None:
                rejected.append(sid)
            continue
        sessions.append(
            Session(
                session_id=sid,
                records=tuple(members),
                full_payload=join_payloads(r.payload for r in members),
                label=label,
            )
        )
    if n_rejected:
        logger.warning("%d mixed-label session(s) rejected under %s", n_rejected, label_rule)
    return sessions


@dataclass(frozen=True)
class CorpusStatistics:
    sessions: int
    normal: int
    attack: int


def corpus_statistics(sessions: Iterable[Session]) -> CorpusStatistics:
    counts = Counter(s.label for s in sessions)
    return CorpusStatistics(
        sessions=counts[NORMAL] + counts[ATTACK],
        normal=counts[NORMAL],
        attack=counts[ATTACK],
    )


def load_sessions(
    path: str,
    format: str = "csv",
    schema: ColumnMap | None = None,
    delimiter: str = ",",
    label_rule: str = "any-attack",
) -> tuple[list[Session], TraceParseResult]:
    with open(path, "rb") as fh:
        parsed = parse_trace_file(fh, format=format, schema=schema, delimiter=delimiter)
    for failure in parsed.failures:
        logger.warning("%s:%d: %s", path, failure.line, failure.reason)
    return group_sessions(parsed.records, label_rule), parsed

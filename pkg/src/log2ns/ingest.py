"""Flow-log parsing, validation, and tokenization.

Accepts CSV (mandatory header, no quoting) and JSONL flow logs, validates
rows into immutable records, and turns records into category:value tokens
for the embedding vocabulary.
"""

from __future__ import annotations

import csv
import io
import json
from collections import Counter
from dataclasses import dataclass, fields as dc_fields
from typing import Iterable, TextIO

# Canonical field order; parsers and serializers never invent other names.
FIELD_NAMES = (
    "src_ip",
    "dst_ip",
    "protocol",
    "src_port",
    "dst_port",
    "bytes_sent",
    "from_zone",
    "to_zone",
    "application",
    "src_region",
    "dst_region",
    "timestamp",
)

MANDATORY_FIELDS = ("src_ip", "dst_ip")

# Token category per record field.
FIELD_CATEGORY = {
    "src_ip": "ip",
    "dst_ip": "ip",
    "protocol": "proto",
    "src_port": "port",
    "dst_port": "port",
    "bytes_sent": "bytes_bucket",
    "from_zone": "zone",
    "to_zone": "zone",
    "application": "app",
    "src_region": "region",
    "dst_region": "region",
}


class SchemaError(ValueError):
    """The input's header/keys cannot produce a valid corpus."""


@dataclass(frozen=True)
class FlowRecord:
    """One validated flow-log row. Absent optional fields are None."""

    src_ip: str
    dst_ip: str
    protocol: str | None = None
    src_port: int | None = None
    dst_port: int | None = None
    bytes_sent: int | None = None
    from_zone: str | None = None
    to_zone: str | None = None
    application: str | None = None
    src_region: str | None = None
    dst_region: str | None = None
    timestamp: float | None = None

    def get(self, field: str):
        return getattr(self, field)

    def present_fields(self) -> tuple[str, ...]:
        return tuple(f for f in FIELD_NAMES if getattr(self, f) is not None)


@dataclass(frozen=True)
class LogCorpus:
    """Ordered, validated flow records plus the input's field schema."""

    records: tuple[FlowRecord, ...]
    schema: tuple[str, ...]

    @property
    def row_count(self) -> int:
        return len(self.records)


@dataclass(frozen=True)
class RejectedRow:
    row: int
    reason: str


@dataclass(frozen=True)
class ParseResult:
    corpus: LogCorpus
    rejects: tuple[RejectedRow, ...]


@dataclass(frozen=True, order=True)
class Token:
    """An entity token; rendered as "category:value" and parsed back losslessly."""

    category: str
    value: str

    def render(self) -> str:
        return f"{self.category}:{self.value}"

    @classmethod
    def parse(cls, text: str) -> "Token":
        category, sep, value = text.partition(":")
        if not sep or not category or not value:
            raise ValueError(f"not a category:value token: {text!r}")
        return cls(category, value)


@dataclass(frozen=True)
class TokenScheme:
    """Which record fields become tokens, and the bytes bucketing base."""

    fields: tuple[str, ...] = (
        "src_ip",
        "dst_ip",
        "application",
        "protocol",
        "src_region",
        "dst_region",
    )
    bytes_bucket_base: int = 10

    def __post_init__(self):
        for f in self.fields:
            if f not in FIELD_CATEGORY:
                raise ValueError(f"field not tokenizable: {f}")
        if self.bytes_bucket_base < 2:
            raise ValueError("bytes_bucket_base must be >= 2")


def _parse_ipv4(raw: str) -> str:
    if ":" in raw:
        raise ValueError("ipv6 unsupported")
    parts = raw.split(".")
    if len(parts) != 4:
        raise ValueError("invalid IPv4")
    octets = []
    for p in parts:
        if not p.isdigit() or (len(p) > 1 and p[0] == "0"):
            raise ValueError("invalid IPv4")
        v = int(p)
        if v > 255:
            raise ValueError("invalid IPv4")
        octets.append(v)
    return ".".join(str(o) for o in octets)


def _parse_port(raw) -> int:
    try:
        v = int(raw)
    except (TypeError, ValueError):
        raise ValueError("invalid port") from None
    if not 0 <= v <= 65535:
        raise ValueError("port out of range")
    return v


def _parse_bytes(raw) -> int:
    try:
        v = int(raw)
    except (TypeError, ValueError):
        raise ValueError("invalid bytes_sent") from None
    if v < 0:
        raise ValueError("negative bytes_sent")
    return v


def _parse_timestamp(raw) -> float:
    try:
        return float(raw)
    except (TypeError, ValueError):
        raise ValueError("invalid timestamp") from None


def _parse_token_field(raw) -> str:
    text = str(raw).strip()
    if not text:
        raise ValueError("empty value")
    return text


_FIELD_PARSERS = {
    "src_ip": _parse_ipv4,
    "dst_ip": _parse_ipv4,
    "protocol": _parse_token_field,
    "src_port": _parse_port,
    "dst_port": _parse_port,
    "bytes_sent": _parse_bytes,
    "from_zone": _parse_token_field,
    "to_zone": _parse_token_field,
    "application": _parse_token_field,
    "src_region": _parse_token_field,
    "dst_region": _parse_token_field,
    "timestamp": _parse_timestamp,
}


def _build_record(raw_fields: dict, row_index: int):
    """Validate one row's raw values. Returns FlowRecord or RejectedRow."""
    values: dict = {}
    for name, raw in raw_fields.items():
        if raw is None:
            continue
        if isinstance(raw, str) and raw.strip() == "":
            continue
        try:
            values[name] = _FIELD_PARSERS[name](raw.strip() if isinstance(raw, str) else raw)
        except ValueError as exc:
            return RejectedRow(row_index, f"{name}: {exc}")
    for name in MANDATORY_FIELDS:
        if name not in values:
            return RejectedRow(row_index, f"{name}: missing mandatory value")
    return FlowRecord(**values)


def _decode(source) -> TextIO:
    if isinstance(source, bytes):
        return io.StringIO(source.decode("utf-8"))
    if isinstance(source, str):
        return io.StringIO(source)
    if hasattr(source, "read"):
        data = source.read()
        if isinstance(data, bytes):
            data = data.decode("utf-8")
        return io.StringIO(data)
    raise TypeError(f"unsupported source type: {type(source)!r}")


def parse_flow_log(source, format: str = "csv_with_header") -> ParseResult:
    """Parse a CSV or JSONL flow log into a corpus plus a rejects report.

    Malformed rows are never silently dropped: each one lands in the rejects
    report with its 0-based data-row index and a reason. A completely empty
    source yields an empty corpus.
    """
    stream = _decode(source)
    if format == "csv_with_header":
        return _parse_csv(stream)
    if format == "jsonl":
        return _parse_jsonl(stream)
    raise ValueError(f"unknown format: {format}")


def _parse_csv(stream: TextIO) -> ParseResult:
    reader = csv.reader(stream)
    try:
        header = next(reader)
    except StopIteration:
        return ParseResult(LogCorpus((), ()), ())
    schema = tuple(h.strip() for h in header)
    unknown = [h for h in schema if h not in FIELD_NAMES]
    if unknown:
        raise SchemaError(f"unknown columns: {', '.join(unknown)}")
    missing = [m for m in MANDATORY_FIELDS if m not in schema]
    if missing:
        raise SchemaError(f"missing mandatory columns: {', '.join(missing)}")
    if len(set(schema)) != len(schema):
        raise SchemaError("duplicate columns in header")

    records: list[FlowRecord] = []
    rejects: list[RejectedRow] = []
    i = 0
    for row in reader:
        if not row:  # blank line, not a data row
            continue
        if len(row) != len(schema):
            rejects.append(RejectedRow(i, f"expected {len(schema)} fields, got {len(row)}"))
            i += 1
            continue
        out = _build_record(dict(zip(schema, row)), i)
        if isinstance(out, RejectedRow):
            rejects.append(out)
        else:
            records.append(out)
        i += 1
    return ParseResult(LogCorpus(tuple(records), schema), tuple(rejects))


def _parse_jsonl(stream: TextIO) -> ParseResult:
    records: list[FlowRecord] = []
    rejects: list[RejectedRow] = []
    schema: list[str] = []
    seen = set()
    i = 0
    for line in stream:
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            rejects.append(RejectedRow(i, f"invalid JSON: {exc.msg}"))
            i += 1
            continue
        if not isinstance(obj, dict):
            rejects.append(RejectedRow(i, "row is not a JSON object"))
            i += 1
            continue
        unknown = [k for k in obj if k not in FIELD_NAMES]
        if unknown:
            rejects.append(RejectedRow(i, f"unknown fields: {', '.join(sorted(unknown))}"))
            i += 1
            continue
        for k in obj:
            if k not in seen:
                seen.add(k)
                schema.append(k)
        out = _build_record(obj, i)
        if isinstance(out, RejectedRow):
            rejects.append(out)
        else:
            records.append(out)
        i += 1
    ordered = tuple(f for f in FIELD_NAMES if f in seen)
    return ParseResult(LogCorpus(tuple(records), ordered), tuple(rejects))


def _int_log_floor(n: int, base: int) -> int:
    # floor(log_base(n)) computed in exact integer arithmetic, n >= 1
    exp = 0
    while n >= base:
        n //= base
        exp += 1
    return exp


def tokenize_record(record: FlowRecord, scheme: TokenScheme) -> list[Token]:
    """Emit one token per configured present field; absent fields emit nothing."""
    tokens: list[Token] = []
    for field in scheme.fields:
        value = record.get(field)
        if value is None:
            continue
        category = FIELD_CATEGORY[field]
        if field == "bytes_sent":
            tokens.append(Token(category, str(_int_log_floor(value + 1, scheme.bytes_bucket_base))))
        else:
            tokens.append(Token(category, str(value)))
    return tokens


@dataclass(frozen=True)
class CorpusStats:
    token_counts: tuple[tuple[Token, int], ...]
    distinct_per_field: dict[str, int]
    total_tokens: int


def corpus_stats(corpus: LogCorpus, scheme: TokenScheme | None = None) -> CorpusStats:
    """Token frequency table (desc count, then lexicographic) plus per-field distinct counts."""
    if scheme is None:
        usable = tuple(f for f in corpus.schema if f in FIELD_CATEGORY)
        scheme = TokenScheme(fields=usable) if usable else TokenScheme(fields=())
    counts: Counter[Token] = Counter()
    distinct: dict[str, set] = {f: set() for f in scheme.fields}
    for record in corpus.records:
        for token in tokenize_record(record, scheme):
            counts[token] += 1
        for f in scheme.fields:
            v = record.get(f)
            if v is not None:
                distinct[f].add(v)
    ordered = tuple(
        sorted(counts.items(), key=lambda kv: (-kv[1], kv[0].render()))
    )
    return CorpusStats(
        token_counts=ordered,
        distinct_per_field={f: len(vs) for f, vs in distinct.items()},
        total_tokens=sum(counts.values()),
    )


def _format_value(field: str, value) -> str:
    if field == "timestamp":
        return repr(value)
    return str(value)


def corpus_to_csv(corpus: LogCorpus) -> str:
    """Serialize with the corpus schema as header; absent fields are empty cells."""
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(corpus.schema)
    for r in corpus.records:
        writer.writerow(
            ["" if r.get(f) is None else _format_value(f, r.get(f)) for f in corpus.schema]
        )
    return out.getvalue()


def corpus_to_jsonl(corpus: LogCorpus) -> str:
    lines = []
    for r in corpus.records:
        obj = {f: r.get(f) for f in corpus.schema if r.get(f) is not None}
        lines.append(json.dumps(obj, sort_keys=False, separators=(",", ":")))
    return "\n".join(lines) + ("\n" if lines else "")


def rejects_to_jsonl(rejects: Iterable[RejectedRow]) -> str:
    lines = [
        json.dumps({"row": r.row, "reason": r.reason}, separators=(",", ":"))
        for r in rejects
    ]
    return "\n".join(lines) + ("\n" if lines else "")


def corpus_to_json(result: ParseResult) -> str:
    """Canonical single-document form used by the artifact store."""
    doc = {
        "schema": list(result.corpus.schema),
        "records": [
            {f: r.get(f) for f in FIELD_NAMES if r.get(f) is not None}
            for r in result.corpus.records
        ],
        "rejects": [{"row": r.row, "reason": r.reason} for r in result.rejects],
    }
    return json.dumps(doc, sort_keys=True, separators=(",", ":")) + "\n"


def corpus_from_json(text: str) -> ParseResult:
    doc = json.loads(text)
    records = tuple(FlowRecord(**obj) for obj in doc["records"])
    rejects = tuple(RejectedRow(r["row"], r["reason"]) for r in doc["rejects"])
    return ParseResult(LogCorpus(records, tuple(doc["schema"])), rejects)


# keep dataclass field order in sync with FIELD_NAMES
assert tuple(f.name for f in dc_fields(FlowRecord)) == FIELD_NAMES

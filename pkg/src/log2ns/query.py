"""Unified constraint queries over logs, embeddings, and the formal model.

Grammar (line-oriented):  <mode>: <clause> (<clause>)*
  mode    = logs | corr | formal | auto
  clause  = field=value | field!=value | field in {v,...} | field not-in {v,...}
          | field=a..b | action=permit|deny | neighbors(token, k=N)
Log rows are positive evidence; formal queries prove or refute the unseen.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from log2ns.embedding.model import EmbeddingModel, nearest_neighbors
from log2ns.ingest import LogCorpus, Token
from log2ns.policy.config import Action
from log2ns.policy.intervals import IntervalSet, ip_to_int
from log2ns.policy.model import (
    PACKET_FIELDS,
    FirewallModel,
    SymbolicPacket,
    Unsat,
    Verdict,
    solve,
)

QUERY_FIELDS = (
    "src_ip",
    "dst_ip",
    "from_zone",
    "to_zone",
    "application",
    "protocol",
    "dst_port",
    "src_region",
    "dst_region",
)
FORMAL_FIELDS = frozenset(PACKET_FIELDS)
_IP_FIELDS = frozenset({"src_ip", "dst_ip"})
_INT_FIELDS = frozenset({"dst_port"})
MODES = ("logs", "corr", "formal", "auto")


class QueryParseError(ValueError):
    def __init__(self, message: str, position: int):
        super().__init__(f"{message} (at position {position})")
        self.message = message
        self.position = position


class QueryExecutionError(ValueError):
    pass


@dataclass(frozen=True)
class Constraint:
    field: str
    op: str          # "=", "!=", "in", "not-in", "range"
    value: object    # str, tuple of str (sets), or (lo, hi) for range


@dataclass(frozen=True)
class Query:
    mode: str
    constraints: tuple[Constraint, ...] = ()
    desired_action: Action | None = None
    anchor: Token | None = None
    k: int | None = None
    limit: int | None = None

    def to_dict(self) -> dict:
        return {
            "mode": self.mode,
            "constraints": [
                {"field": c.field, "op": c.op, "value": list(c.value) if isinstance(c.value, tuple) else c.value}
                for c in self.constraints
            ],
            "desired_action": self.desired_action.name if self.desired_action else None,
            "anchor": self.anchor.render() if self.anchor else None,
            "k": self.k,
            "limit": self.limit,
        }


class _Scanner:
    def __init__(self, text: str):
        self.text = text
        self.pos = 0

    def error(self, message: str):
        raise QueryParseError(message, self.pos)

    def skip_ws(self):
        while self.pos < len(self.text) and self.text[self.pos].isspace():
            self.pos += 1

    def at_end(self) -> bool:
        return self.pos >= len(self.text)

    def take_while(self, pred) -> str:
        start = self.pos
        while self.pos < len(self.text) and pred(self.text[self.pos]):
            self.pos += 1
        return self.text[start : self.pos]

    def expect(self, literal: str):
        if not self.text.startswith(literal, self.pos):
            self.error(f"expected {literal!r}")
        self.pos += len(literal)


def _is_word_char(ch: str) -> bool:
    return ch.isalnum() or ch in "_-"


def _is_value_char(ch: str) -> bool:
    return not ch.isspace() and ch not in ",{}()=!"


def parse_query(text: str) -> Query:
    """Parse one query line; errors carry the offending position."""
    s = _Scanner(text)
    s.skip_ws()
    mode = s.take_while(_is_word_char)
    if mode not in MODES:
        s.pos -= len(mode)
        s.error(f"unknown mode {mode!r} (expected one of {', '.join(MODES)})")
    s.skip_ws()
    s.expect(":")

    constraints: list[Constraint] = []
    desired: Action | None = None
    anchor: Token | None = None
    k: int | None = None
    while True:
        s.skip_ws()
        if s.at_end():
            break
        if s.text.startswith("neighbors(", s.pos):
            if anchor is not None:
                s.error("more than one neighbors() anchor")
            s.pos += len("neighbors(")
            raw = s.take_while(lambda ch: ch not in ",)").strip()
            try:
                anchor = Token.parse(raw)
            except ValueError:
                s.error(f"bad anchor token {raw!r} (want category:value)")
            s.skip_ws()
            s.expect(",")
            s.skip_ws()
            s.expect("k=")
            digits = s.take_while(str.isdigit)
            if not digits:
                s.error("expected neighbor count after k=")
            k = int(digits)
            s.skip_ws()
            s.expect(")")
            continue

        start = s.pos
        word = s.take_while(_is_word_char)
        if not word:
            s.error("expected a clause")
        if word == "action":
            s.expect("=")
            value = s.take_while(_is_value_char).lower()
            if value not in ("permit", "deny"):
                s.error("action must be permit or deny")
            desired = Action.PERMIT if value == "permit" else Action.DENY
            continue
        if word not in QUERY_FIELDS:
            s.pos = start
            s.error(f"unknown field {word!r}")

        s.skip_ws()
        if s.text.startswith("!=", s.pos):
            s.pos += 2
            value = s.take_while(_is_value_char)
            if not value:
                s.error("expected a value")
            constraints.append(Constraint(word, "!=", value))
        elif s.text.startswith("=", s.pos):
            s.pos += 1
            value = s.take_while(_is_value_char)
            if not value:
                s.error("expected a value")
            if ".." in value:
                lo, _, hi = value.partition("..")
                if not lo or not hi:
                    s.error("range needs both endpoints")
                constraints.append(Constraint(word, "range", (lo, hi)))
            else:
                constraints.append(Constraint(word, "=", value))
        elif s.text.startswith("not-in", s.pos) or s.text.startswith("in", s.pos):
            op = "not-in" if s.text.startswith("not-in", s.pos) else "in"
            s.pos += len(op)
            s.skip_ws()
            s.expect("{")
            values = []
            while True:
                s.skip_ws()
                v = s.take_while(_is_value_char)
                if v:
                    values.append(v)
                s.skip_ws()
                if s.at_end():
                    s.error("unterminated value set")
                ch = s.text[s.pos]
                if ch == ",":
                    s.pos += 1
                elif ch == "}":
                    s.pos += 1
                    break
                else:
                    s.error("expected , or } in value set")
            if not values:
                s.error("empty value set")
            constraints.append(Constraint(word, op, tuple(values)))
        else:
            s.error("expected =, !=, in, or not-in")

    if mode == "corr":
        if anchor is None:
            s.error("corr query needs a neighbors(token, k=N) anchor")
        if k is None or k < 1:
            s.error("corr query needs k >= 1")
        if constraints or desired is not None:
            s.error("corr query takes only the neighbors() anchor")
    elif anchor is not None:
        s.error("neighbors() is only valid in corr mode")
    if mode in ("formal",):
        for c in constraints:
            if c.field not in FORMAL_FIELDS:
                s.error(f"field {c.field!r} is not part of the formal model")
    return Query(
        mode=mode,
        constraints=tuple(constraints),
        desired_action=desired,
        anchor=anchor,
        k=k,
    )


@dataclass(frozen=True)
class QueryResult:
    provenance: str                   # log_search | correlation | formal
    elapsed_s: float
    matches: tuple[int, ...] | None = None
    neighbors: tuple[tuple[Token, float], ...] | None = None
    verdict: object | None = None     # Verdict or Unsat
    escalated: bool = False

    def to_dict(self) -> dict:
        out: dict = {"provenance": self.provenance, "elapsed_s": self.elapsed_s, "escalated": self.escalated}
        if self.provenance == "log_search":
            out["matches"] = list(self.matches)
        elif self.provenance == "correlation":
            out["neighbors"] = [[t.render(), sim] for t, sim in self.neighbors]
        else:
            out["verdict"] = self.verdict.to_dict()
        return out


def _record_matches(record, c: Constraint) -> bool:
    raw = record.get(c.field)
    if raw is None:
        return False  # absent fields satisfy nothing, negations included
    if c.op == "range":
        lo, hi = c.value
        if c.field in _IP_FIELDS:
            return ip_to_int(lo) <= ip_to_int(raw) <= ip_to_int(hi)
        return int(lo) <= int(raw) <= int(hi)
    text = str(raw)
    if c.op == "=":
        return text == c.value
    if c.op == "!=":
        return text != c.value
    if c.op == "in":
        return text in c.value
    if c.op == "not-in":
        return text not in c.value
    raise QueryExecutionError(f"unknown operator {c.op!r}")


def search_logs(corpus: LogCorpus, query: Query) -> tuple[int, ...]:
    """Exact predicate scan; a row matches iff it satisfies every constraint."""
    out = []
    for i, record in enumerate(corpus.records):
        if all(_record_matches(record, c) for c in query.constraints):
            out.append(i)
            if query.limit is not None and len(out) >= query.limit:
                break
    return tuple(out)


def constraints_to_symbolic(query: Query, model: FirewallModel) -> SymbolicPacket:
    """Constraint list to per-field sets; negations complement within domains."""
    fields: dict = {}

    def merge(name, value):
        if name in fields:
            value = (
                fields[name].intersect(value)
                if isinstance(value, IntervalSet)
                else fields[name] & value
            )
        fields[name] = value

    for c in query.constraints:
        if c.field not in FORMAL_FIELDS:
            raise QueryExecutionError(f"field {c.field!r} is not part of the formal model")
        domain = model.space.get(c.field)
        if c.field in _IP_FIELDS or c.field in _INT_FIELDS:
            to_int = ip_to_int if c.field in _IP_FIELDS else int
            if c.op == "range":
                iv = IntervalSet.span(to_int(c.value[0]), to_int(c.value[1]))
            elif c.op in ("=", "!="):
                v = to_int(c.value)
                iv = IntervalSet.single(v)
                if c.op == "!=":
                    iv = domain.subtract(iv)
            else:
                iv = IntervalSet.from_spans((to_int(v), to_int(v)) for v in c.value)
                if c.op == "not-in":
                    iv = domain.subtract(iv)
            merge(c.field, iv)
        else:
            if c.op == "range":
                raise QueryExecutionError(f"range is not valid for {c.field}")
            values = frozenset([c.value]) if isinstance(c.value, str) else frozenset(c.value)
            if c.op in ("!=", "not-in"):
                values = frozenset(domain) - values
            merge(c.field, values)
    return SymbolicPacket(**fields)


def execute(
    query: Query,
    corpus: LogCorpus | None = None,
    embedding: EmbeddingModel | None = None,
    formal: FirewallModel | None = None,
) -> QueryResult:
    """Route to log search, embedding correlation, or the formal solver.

    auto runs log search first and escalates to the formal engine only when
    zero rows match, marking the escalation on the result.
    """
    start = time.perf_counter()

    def need(artifact, name):
        if artifact is None:
            raise QueryExecutionError(f"query mode {query.mode!r} requires the {name} artifact")
        return artifact

    if query.mode == "logs":
        matches = search_logs(need(corpus, "corpus"), query)
        return QueryResult("log_search", time.perf_counter() - start, matches=matches)
    if query.mode == "corr":
        model = need(embedding, "embedding")
        try:
            found = nearest_neighbors(model, query.anchor, query.k)
        except KeyError as exc:
            raise QueryExecutionError(str(exc)) from None
        return QueryResult("correlation", time.perf_counter() - start, neighbors=tuple(found))
    if query.mode == "formal":
        model = need(formal, "firewall")
        verdict = solve(model, constraints_to_symbolic(query, model), query.desired_action)
        return QueryResult("formal", time.perf_counter() - start, verdict=verdict)
    if query.mode == "auto":
        matches = search_logs(need(corpus, "corpus"), query)
        if matches:
            return QueryResult("log_search", time.perf_counter() - start, matches=matches)
        model = need(formal, "firewall")
        verdict = solve(model, constraints_to_symbolic(query, model), query.desired_action)
        return QueryResult("formal", time.perf_counter() - start, verdict=verdict, escalated=True)
    raise QueryExecutionError(f"unknown mode {query.mode!r}")


@dataclass(frozen=True)
class WitnessFailure:
    row: int
    constraints: dict
    reason: str


@dataclass(frozen=True)
class WitnessReport:
    sampled: int
    passed: int
    failures: tuple[WitnessFailure, ...]

    def to_dict(self) -> dict:
        return {
            "sampled": self.sampled,
            "passed": self.passed,
            "failures": [
                {"row": f.row, "constraints": f.constraints, "reason": f.reason}
                for f in self.failures
            ],
        }


def _row_constraints(record) -> SymbolicPacket:
    fields: dict = {}
    for name in ("from_zone", "to_zone", "application"):
        value = record.get(name)
        if value is not None:
            fields[name] = frozenset({value})
    fields["src_ip"] = IntervalSet.single(ip_to_int(record.src_ip))
    fields["dst_ip"] = IntervalSet.single(ip_to_int(record.dst_ip))
    return SymbolicPacket(**fields)


def witness_check(
    corpus: LogCorpus, model: FirewallModel, sample_size: int, seed: int = 0
) -> WitnessReport:
    """Assert sampled logged flows are PERMIT-satisfiable in the model.

    Logged traffic was observed crossing the firewall, so an UNSAT row
    points at an over-constrained model (or a policy edit that now blocks
    previously seen traffic).
    """
    if sample_size < 0:
        raise ValueError("sample size must be >= 0")
    n = min(sample_size, corpus.row_count)
    rng = np.random.default_rng(seed)
    picked = sorted(int(i) for i in rng.choice(corpus.row_count, size=n, replace=False)) if n else []
    failures: list[WitnessFailure] = []
    for row in picked:
        constraints = _row_constraints(corpus.records[row])
        result = solve(model, constraints, Action.PERMIT)
        if isinstance(result, Unsat):
            failures.append(WitnessFailure(row, constraints.to_dict(), result.reason))
    return WitnessReport(sampled=len(picked), passed=len(picked) - len(failures), failures=tuple(failures))

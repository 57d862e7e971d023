import json
from pathlib import Path

import numpy as np
import pytest

from log2ns.embedding import TrainingParams, build_vocabulary, generate_pairs, PairSchema, train_skipgram_hs
from log2ns.ingest import Token, TokenScheme, parse_flow_log
from log2ns.policy.config import Action, parse_config
from log2ns.policy.model import Unsat, Verdict, compile_rules
from log2ns.query import (
    Constraint,
    Query,
    QueryExecutionError,
    QueryParseError,
    execute,
    parse_query,
    search_logs,
    witness_check,
)
from log2ns.synth import generate_logs, rows_to_csv

FIXTURES = Path(__file__).resolve().parent.parent / "fixtures"


def base_model():
    return compile_rules(parse_config((FIXTURES / "firewall_base.json").read_bytes()))


def synth_corpus(n=120, seed=5):
    config = parse_config((FIXTURES / "firewall_base.json").read_bytes())
    rows, covering = generate_logs(config, n, seed=seed)
    result = parse_flow_log(rows_to_csv(rows).encode(), "csv_with_header")
    assert result.rejects == ()
    return result.corpus, covering


# --- grammar ----------------------------------------------------------------

def test_parse_formal_table4_query():
    q = parse_query("formal: from_zone=Trust to_zone=Untrust dst_ip=42.62.94.2 action=permit")
    assert q.mode == "formal"
    assert q.desired_action == Action.PERMIT
    assert q.constraints == (
        Constraint("from_zone", "=", "Trust"),
        Constraint("to_zone", "=", "Untrust"),
        Constraint("dst_ip", "=", "42.62.94.2"),
    )


def test_parse_logs_set_query():
    q = parse_query("logs: dst_ip in {4.4.4.4, 8.8.8.8} application=dns")
    assert q.mode == "logs"
    assert q.constraints[0] == Constraint("dst_ip", "in", ("4.4.4.4", "8.8.8.8"))
    assert q.constraints[1] == Constraint("application", "=", "dns")


def test_parse_corr_query():
    q = parse_query("corr: neighbors(ip:10.11.29.5, k=10)")
    assert q.mode == "corr"
    assert q.anchor == Token("ip", "10.11.29.5")
    assert q.k == 10


def test_parse_range_and_negations():
    q = parse_query("logs: dst_port=1024..2048 application!=dns from_zone not-in {Trust, Internal}")
    assert q.constraints == (
        Constraint("dst_port", "range", ("1024", "2048")),
        Constraint("application", "!=", "dns"),
        Constraint("from_zone", "not-in", ("Trust", "Internal")),
    )


def test_parse_errors_carry_position():
    with pytest.raises(QueryParseError) as err:
        parse_query("logs: dst_ip==")
    assert err.value.position == len("logs: dst_ip=")
    with pytest.raises(QueryParseError) as err:
        parse_query("blah: a=1")
    assert err.value.position == 0


def test_unknown_field_rejected():
    with pytest.raises(QueryParseError, match="unknown field"):
        parse_query("logs: color=red")


def test_corr_requires_anchor():
    with pytest.raises(QueryParseError, match="anchor"):
        parse_query("corr: application=dns")


def test_formal_rejects_region_fields():
    with pytest.raises(QueryParseError, match="formal model"):
        parse_query("formal: src_region=US")


# --- log search -------------------------------------------------------------

def full_scan_oracle(corpus, query):
    """Independent brute-force filter with the documented semantics."""
    from log2ns.policy.intervals import ip_to_int

    hits = []
    for i, r in enumerate(corpus.records):
        ok = True
        for c in query.constraints:
            raw = r.get(c.field)
            if raw is None:
                ok = False
                break
            if c.op == "range":
                conv = ip_to_int if c.field in ("src_ip", "dst_ip") else int
                ok = conv(c.value[0]) <= conv(str(raw)) <= conv(c.value[1])
            elif c.op == "=":
                ok = str(raw) == c.value
            elif c.op == "!=":
                ok = str(raw) != c.value
            elif c.op == "in":
                ok = str(raw) in c.value
            else:
                ok = str(raw) not in c.value
            if not ok:
                break
        if ok:
            hits.append(i)
    return tuple(hits)


def test_log_search_matches_full_scan_oracle():
    corpus, _ = synth_corpus()
    queries = [
        "logs: application=dns",
        "logs: application!=web-browsing",
        "logs: dst_port=0..100",
        "logs: from_zone in {Trust, Internal} protocol=udp",
        "logs: dst_ip not-in {4.4.4.4} application in {dns, ssl}",
        "logs: src_ip=10.11.29.0..10.11.29.255",
    ]
    for text in queries:
        q = parse_query(text)
        assert search_logs(corpus, q) == full_scan_oracle(corpus, q)


def test_log_search_empty_result():
    corpus, _ = synth_corpus()
    q = parse_query("logs: application=no-such-app")
    result = execute(q, corpus=corpus)
    assert result.provenance == "log_search"
    assert result.matches == ()
    assert not result.escalated


def test_execute_formal_table4():
    result = execute(
        parse_query("formal: from_zone=Trust to_zone=Untrust dst_ip=42.62.94.2 action=permit"),
        formal=base_model(),
    )
    assert result.provenance == "formal"
    assert isinstance(result.verdict, Verdict)
    assert result.verdict.matched_rule == "BypassFW"


def test_auto_escalates_only_on_zero_matches():
    corpus, _ = synth_corpus()
    model = base_model()
    some = execute(parse_query("auto: application=dns"), corpus=corpus, formal=model)
    assert some.provenance == "log_search" and not some.escalated

    none = execute(
        parse_query("auto: from_zone=Untrust to_zone=Trust application=dns action=permit"),
        corpus=corpus,
        formal=model,
    )
    assert none.provenance == "formal" and none.escalated
    assert isinstance(none.verdict, (Verdict, Unsat))


def test_missing_artifact_error_names_it():
    with pytest.raises(QueryExecutionError, match="corpus"):
        execute(parse_query("logs: application=dns"))
    with pytest.raises(QueryExecutionError, match="firewall"):
        execute(parse_query("formal: application=dns"))


def test_corr_executes_against_embedding():
    corpus, _ = synth_corpus()
    scheme = TokenScheme(fields=("src_ip", "dst_ip", "application"))
    vocab = build_vocabulary(corpus, scheme)
    pairs = list(generate_pairs(corpus, PairSchema(entries=(("src_ip", "dst_ip"), ("src_ip", "application"))), vocab, scheme))
    model = train_skipgram_hs(pairs, vocab, params=TrainingParams(dimension=8, epochs=2, seed=0))
    anchor = vocab.tokens[0]
    result = execute(
        parse_query(f"corr: neighbors({anchor.render()}, k=3)"), embedding=model
    )
    assert result.provenance == "correlation"
    assert len(result.neighbors) == 3


# --- witness properties -----------------------------------------------------

def test_witness_check_zero_sample():
    corpus, _ = synth_corpus(n=10)
    report = witness_check(corpus, base_model(), 0, seed=1)
    assert (report.sampled, report.passed, report.failures) == (0, 0, ())


def test_witness_check_consistent_fixture_has_no_failures():
    corpus, _ = synth_corpus(n=150, seed=9)
    report = witness_check(corpus, base_model(), corpus.row_count, seed=2)
    assert report.sampled == corpus.row_count
    assert report.passed == corpus.row_count
    assert report.failures == ()


def test_witness_check_ablation_fails_exactly_covered_rows():
    corpus, covering = synth_corpus(n=150, seed=9)
    doc = json.loads((FIXTURES / "firewall_base.json").read_text())
    doc["rules"] = [r for r in doc["rules"] if r["name"] != "BypassFW"]
    ablated = compile_rules(parse_config(json.dumps(doc)))
    report = witness_check(corpus, ablated, corpus.row_count, seed=3)
    expected_failures = {i for i, rule in enumerate(covering) if rule == "BypassFW"}
    assert {f.row for f in report.failures} == expected_failures
    assert report.sampled == corpus.row_count
    assert report.passed == corpus.row_count - len(expected_failures)


def test_witness_failure_reports_first_conflicting_field():
    corpus, covering = synth_corpus(n=60, seed=4)
    doc = json.loads((FIXTURES / "firewall_base.json").read_text())
    doc["rules"] = []
    empty_model = compile_rules(parse_config(json.dumps(doc)))
    report = witness_check(corpus, empty_model, 5, seed=5)
    assert report.passed == 0
    for f in report.failures:
        assert "no rule yields action PERMIT" in f.reason

import pytest

from log2ns.embedding import PairSchema, build_vocabulary, generate_pairs
from log2ns.embedding.vocab import vocabulary_from_text, vocabulary_to_text
from log2ns.ingest import Token, TokenScheme, parse_flow_log


def corpus(rows, header="src_ip,dst_ip,application,dst_region"):
    src = header + "\n" + "\n".join(rows) + "\n"
    result = parse_flow_log(src.encode(), "csv_with_header")
    assert result.rejects == ()
    return result.corpus


SCHEME = TokenScheme(fields=("src_ip", "dst_ip", "application", "dst_region"))


def test_single_record_vocab_size():
    c = corpus(["10.0.0.1,8.8.8.8,dns,US"])
    vocab = build_vocabulary(c, SCHEME)
    assert vocab.size == 4


def test_shared_destination_counted():
    c = corpus(["10.0.0.1,8.8.8.8,dns,US", "10.0.0.2,8.8.8.8,dns,US"])
    vocab = build_vocabulary(c, SCHEME)
    assert vocab.frequencies[vocab.id_of(Token("ip", "8.8.8.8"))] == 2


def test_ids_dense_and_frequency_ordered():
    c = corpus(
        ["10.0.0.1,8.8.8.8,dns,US", "10.0.0.1,8.8.8.8,ssl,US", "10.0.0.1,4.4.4.4,dns,EU"]
    )
    vocab = build_vocabulary(c, SCHEME)
    assert sorted(vocab.token_to_id.values()) == list(range(vocab.size))
    freqs = list(vocab.frequencies)
    assert freqs == sorted(freqs, reverse=True)
    # ties broken lexicographically on rendered form
    for i in range(vocab.size - 1):
        if freqs[i] == freqs[i + 1]:
            assert vocab.tokens[i].render() < vocab.tokens[i + 1].render()


def test_vocab_matches_distinct_count_oracle():
    import random

    rng = random.Random(3)
    rows = [
        f"10.0.{rng.randint(0, 2)}.{rng.randint(1, 5)},8.8.{rng.randint(4, 8)}.8,"
        f"{rng.choice(['dns', 'ssl'])},{rng.choice(['US', 'EU'])}"
        for _ in range(100)
    ]
    c = corpus(rows)
    distinct = set()
    for row in rows:
        s, d, a, g = row.split(",")
        distinct |= {f"ip:{s}", f"ip:{d}", f"app:{a}", f"region:{g}"}
    assert build_vocabulary(c, SCHEME).size == len(distinct)


def test_vocab_text_round_trip():
    c = corpus(["10.0.0.1,8.8.8.8,dns,US", "10.0.0.1,4.4.4.4,dns,US"])
    vocab = build_vocabulary(c, SCHEME)
    assert vocabulary_from_text(vocabulary_to_text(vocab)) == vocab


def test_schema_rejects_self_pair():
    with pytest.raises(ValueError):
        PairSchema(entries=(("src_ip", "src_ip"),))


def test_table_style_pairs_for_one_row():
    c = corpus(["10.0.0.1,8.8.8.8,dns,US"])
    vocab = build_vocabulary(c, SCHEME)
    got = [
        (vocab.tokens[p.context_id].render(), vocab.tokens[p.target_id].render())
        for p in generate_pairs(c, PairSchema(), vocab)
    ]
    assert got == [
        ("ip:10.0.0.1", "ip:8.8.8.8"),
        ("ip:10.0.0.1", "app:dns"),
        ("app:dns", "ip:8.8.8.8"),
        ("region:US", "ip:10.0.0.1"),
        ("region:US", "app:dns"),
    ]


def test_empty_corpus_empty_stream():
    c = corpus([])
    vocab = build_vocabulary(c, SCHEME)
    assert list(generate_pairs(c, PairSchema(), vocab)) == []


def test_absent_field_skips_only_its_entries():
    c = corpus(["10.0.0.1,8.8.8.8,dns,"])  # no dst_region
    vocab = build_vocabulary(c, SCHEME)
    got = [
        (vocab.tokens[p.context_id].category, vocab.tokens[p.target_id].category)
        for p in generate_pairs(c, PairSchema(), vocab)
    ]
    assert got == [("ip", "ip"), ("ip", "app"), ("app", "ip")]


def test_pairs_never_cross_rows_and_schema_closure():
    rows = ["10.0.0.1,8.8.8.8,dns,US", "10.0.0.2,4.4.4.4,ssl,EU", "10.0.0.3,1.1.1.1,ssl,"]
    c = corpus(rows)
    vocab = build_vocabulary(c, SCHEME)
    schema = PairSchema()
    field_of = {}
    for i, row in enumerate(rows):
        s, d, a, g = row.split(",")
        field_of[(i, f"ip:{s}")] = "src_ip"
        field_of[(i, f"ip:{d}")] = "dst_ip"
        field_of[(i, f"app:{a}")] = "application"
        if g:
            field_of[(i, f"region:{g}")] = "dst_region"
    seen_relations = set()
    for p in generate_pairs(c, schema, vocab):
        ctx = vocab.tokens[p.context_id].render()
        tgt = vocab.tokens[p.target_id].render()
        # both tokens must resolve within the pair's source row
        assert (p.source_row, ctx) in field_of
        assert (p.source_row, tgt) in field_of
        seen_relations.add((field_of[(p.source_row, ctx)], field_of[(p.source_row, tgt)]))
    assert seen_relations <= set(schema.entries)
    # rows 0 and 1 are fully populated, so every relation appears
    assert seen_relations == set(schema.entries)


def test_schema_without_proto_yields_no_proto_context():
    c = corpus(["10.0.0.1,8.8.8.8,dns,US"])
    vocab = build_vocabulary(c, SCHEME)
    for p in generate_pairs(c, PairSchema(), vocab):
        assert vocab.tokens[p.context_id].category != "proto"


def test_pair_count_is_rows_times_present_entries():
    rows = ["10.0.0.%d,8.8.8.8,dns,US" % i for i in range(1, 6)]
    c = corpus(rows)
    vocab = build_vocabulary(c, SCHEME)
    assert len(list(generate_pairs(c, PairSchema(), vocab))) == 5 * len(PairSchema().entries)

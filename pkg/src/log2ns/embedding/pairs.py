"""Schema-driven context-target pair generation.

Pairs come from field relations inside a single log row, never from a
sliding window and never across rows.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator

from log2ns.ingest import FIELD_CATEGORY, LogCorpus, Token, TokenScheme, tokenize_record
from log2ns.embedding.vocab import Vocabulary

# Default relation set: source address predicts destination address and
# application; application predicts destination address; destination region
# predicts source address and application.
DEFAULT_PAIR_ENTRIES = (
    ("src_ip", "dst_ip"),
    ("src_ip", "application"),
    ("application", "dst_ip"),
    ("dst_region", "src_ip"),
    ("dst_region", "application"),
)


@dataclass(frozen=True)
class PairSchema:
    """Ordered (context_field, target_field) relations."""

    entries: tuple[tuple[str, str], ...] = DEFAULT_PAIR_ENTRIES

    def __post_init__(self):
        for ctx, tgt in self.entries:
            if ctx == tgt:
                raise ValueError(f"schema entry pairs field with itself: {ctx}")
            for f in (ctx, tgt):
                if f not in FIELD_CATEGORY:
                    raise ValueError(f"unknown field in pair schema: {f}")

    def fields(self) -> tuple[str, ...]:
        seen: list[str] = []
        for ctx, tgt in self.entries:
            for f in (ctx, tgt):
                if f not in seen:
                    seen.append(f)
        return tuple(seen)


@dataclass(frozen=True)
class ContextTargetPair:
    context_id: int
    target_id: int
    source_row: int


def _field_token(record, field: str, scheme: TokenScheme) -> Token | None:
    value = record.get(field)
    if value is None:
        return None
    sub = TokenScheme(fields=(field,), bytes_bucket_base=scheme.bytes_bucket_base)
    toks = tokenize_record(record, sub)
    return toks[0] if toks else None


def generate_pairs(
    corpus: LogCorpus,
    schema: PairSchema,
    vocab: Vocabulary,
    scheme: TokenScheme | None = None,
) -> Iterator[ContextTargetPair]:
    """Yield pairs row-major, then in schema entry order.

    A row contributes one pair per schema entry whose two fields are both
    present; nothing else is ever emitted.
    """
    if scheme is None:
        scheme = TokenScheme(fields=schema.fields())
    for row_index, record in enumerate(corpus.records):
        for ctx_field, tgt_field in schema.entries:
            ctx = _field_token(record, ctx_field, scheme)
            if ctx is None:
                continue
            tgt = _field_token(record, tgt_field, scheme)
            if tgt is None:
                continue
            yield ContextTargetPair(vocab.id_of(ctx), vocab.id_of(tgt), row_index)

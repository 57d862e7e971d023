"""Token vocabulary built from a tokenized corpus."""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass

from log2ns.ingest import LogCorpus, Token, TokenScheme, tokenize_record


@dataclass(frozen=True)
class Vocabulary:
    """Dense token ids assigned by descending frequency, ties lexicographic."""

    tokens: tuple[Token, ...]          # index = id
    frequencies: tuple[int, ...]       # per id, >= 1
    token_to_id: dict[Token, int]

    @property
    def size(self) -> int:
        return len(self.tokens)

    def id_of(self, token: Token) -> int:
        try:
            return self.token_to_id[token]
        except KeyError:
            raise KeyError(f"token not in vocabulary: {token.render()}") from None

    def __contains__(self, token: Token) -> bool:
        return token in self.token_to_id


def vocabulary_from_counts(counts: dict[Token, int]) -> Vocabulary:
    ordered = sorted(counts.items(), key=lambda kv: (-kv[1], kv[0].render()))
    tokens = tuple(t for t, _ in ordered)
    freqs = tuple(c for _, c in ordered)
    if any(c < 1 for c in freqs):
        raise ValueError("frequencies must be >= 1")
    return Vocabulary(tokens, freqs, {t: i for i, t in enumerate(tokens)})


def build_vocabulary(corpus: LogCorpus, scheme: TokenScheme) -> Vocabulary:
    """Count every token the scheme emits over the corpus and assign ids."""
    counts: Counter[Token] = Counter()
    for record in corpus.records:
        counts.update(tokenize_record(record, scheme))
    return vocabulary_from_counts(dict(counts))


def vocabulary_to_text(vocab: Vocabulary) -> str:
    """Persisted form: one "category:value<TAB>frequency" line per id."""
    return "".join(
        f"{tok.render()}\t{freq}\n" for tok, freq in zip(vocab.tokens, vocab.frequencies)
    )


def vocabulary_from_text(text: str) -> Vocabulary:
    tokens: list[Token] = []
    freqs: list[int] = []
    for line in text.splitlines():
        if not line.strip():
            continue
        rendered, _, freq = line.rpartition("\t")
        tokens.append(Token.parse(rendered))
        freqs.append(int(freq))
    return Vocabulary(tuple(tokens), tuple(freqs), {t: i for i, t in enumerate(tokens)})

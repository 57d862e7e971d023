"""Shared synthetic builders for the test suite."""

from __future__ import annotations

import numpy as np

from log2ns.embedding import ContextTargetPair, Vocabulary, build_huffman
from log2ns.embedding.vocab import vocabulary_from_counts
from log2ns.ingest import Token


def vocab_from_freqs(freqs: dict[str, int]) -> Vocabulary:
    return vocabulary_from_counts({Token.parse(k): v for k, v in freqs.items()})


def make_toy_model_arrays(size: int, dim: int, seed: int, dtype=np.float64):
    """Random weights plus the tree for a vocabulary of `size` equal-ish freqs."""
    rng = np.random.default_rng(seed)
    freqs = {f"app:t{i}": int(rng.integers(1, 20)) for i in range(size)}
    vocab = vocab_from_freqs(freqs)
    tree = build_huffman(vocab)
    input_vectors = rng.normal(0, 1, size=(size, dim)).astype(dtype)
    inner_vectors = rng.normal(0, 1, size=(size - 1, dim)).astype(dtype)
    return vocab, tree, input_vectors, inner_vectors


def make_similarity_pairs(seed: int, n_per_token: int = 150):
    """Contexts A and B draw targets from one distribution, C from a disjoint one."""
    rng = np.random.default_rng(seed)
    a, b, c = Token("ip", "10.0.0.1"), Token("ip", "10.0.0.2"), Token("ip", "10.0.0.3")
    shared = [Token("app", f"x{i}") for i in range(4)]
    disjoint = [Token("app", f"y{i}") for i in range(4)]
    dist = np.array([0.4, 0.3, 0.2, 0.1])

    draws: list[tuple[Token, Token]] = []
    for ctx in (a, b):
        for t in rng.choice(4, size=n_per_token, p=dist):
            draws.append((ctx, shared[t]))
    for t in rng.choice(4, size=n_per_token, p=dist):
        draws.append((c, disjoint[t]))
    rng.shuffle(draws)

    counts: dict[Token, int] = {}
    for ctx, tgt in draws:
        counts[ctx] = counts.get(ctx, 0) + 1
        counts[tgt] = counts.get(tgt, 0) + 1
    vocab = vocabulary_from_counts(counts)
    pairs = [
        ContextTargetPair(vocab.id_of(ctx), vocab.id_of(tgt), i)
        for i, (ctx, tgt) in enumerate(draws)
    ]
    return vocab, pairs, (a, b, c)


def cosine(u: np.ndarray, v: np.ndarray) -> float:
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    nu, nv = np.linalg.norm(u), np.linalg.norm(v)
    if nu == 0 or nv == 0:
        return 0.0
    return float(u @ v / (nu * nv))


# ---------------------------------------------------------------------------
# Random policy fixtures over the small acceptance domain:
# 4 zones x 16 addresses x 4 applications x 4 services.

import json

from log2ns.policy.config import Action
from log2ns.policy.intervals import IntervalSet, ip_to_int
from log2ns.policy.model import SymbolicPacket

SMALL_ZONES = ["Trust", "Untrust", "Internal", "Dmz"]
SMALL_APPS = ["dns", "not-applicable", "ssl", "web-browsing"]
SMALL_ADDR_BASE = ip_to_int("10.0.0.0")
SMALL_ADDR_COUNT = 16
SMALL_PORTS = [53, 80, 123, 443]
SMALL_SERVICES = {
    "svc-dns": {"protocol": "udp", "ports": "53"},
    "svc-web": {"protocol": "tcp", "ports": "80"},
    "svc-ntp": {"protocol": "udp", "ports": "123"},
    "svc-ssl": {"protocol": "tcp", "ports": "443"},
}


def _addr(i: int) -> str:
    return f"10.0.0.{i}"


def random_small_config(rng, max_rules: int = 10) -> str:
    """JSON config text over the small finite domain."""
    def maybe_any(p, make):
        return "any" if rng.random() < p else make()

    def zone_subset():
        k = int(rng.integers(1, 3))
        return sorted(rng.choice(SMALL_ZONES, size=k, replace=False).tolist())

    def addr_terms():
        if rng.random() < 0.5:
            a, b = sorted(rng.integers(0, SMALL_ADDR_COUNT, size=2).tolist())
            return [f"{_addr(a)}-{_addr(b)}"]
        k = int(rng.integers(1, 4))
        return sorted({_addr(int(i)) for i in rng.integers(0, SMALL_ADDR_COUNT, size=k)})

    def app_subset():
        k = int(rng.integers(1, 3))
        return sorted(rng.choice(SMALL_APPS, size=k, replace=False).tolist())

    def services_term():
        roll = rng.random()
        if roll < 0.35:
            return "any"
        if roll < 0.6:
            return "application-default"
        k = int(rng.integers(1, 3))
        return sorted(rng.choice(sorted(SMALL_SERVICES), size=k, replace=False).tolist())

    n_rules = int(rng.integers(0, max_rules + 1))
    rules = []
    for i in range(n_rules):
        rules.append(
            {
                "name": f"R{i}",
                "from_zones": maybe_any(0.4, zone_subset),
                "to_zones": maybe_any(0.4, zone_subset),
                "src_addrs": maybe_any(0.4, addr_terms),
                "dst_addrs": maybe_any(0.4, addr_terms),
                "applications": maybe_any(0.4, app_subset),
                "services": services_term(),
                "action": "permit" if rng.random() < 0.5 else "deny",
            }
        )
    doc = {
        "zones": SMALL_ZONES,
        "address_objects": {},
        "address_groups": {},
        "applications": {
            "dns": {"default_service": "svc-dns"},
            "web-browsing": {"default_service": "svc-web"},
            "ssl": {"default_service": "svc-ssl"},
            "not-applicable": None,
        },
        "application_groups": {},
        "service_objects": SMALL_SERVICES,
        "rules": rules,
        "domains": {
            "addresses": [f"{_addr(0)}-{_addr(SMALL_ADDR_COUNT - 1)}"],
            "ports": SMALL_PORTS,
            "protocols": ["tcp", "udp"],
        },
    }
    return json.dumps(doc)


def random_symbolic_query(rng):
    """Random per-field constraints plus an optional desired action."""
    def zone_constraint():
        k = int(rng.integers(1, 3))
        return frozenset(rng.choice(SMALL_ZONES, size=k, replace=False).tolist())

    def addr_constraint():
        if rng.random() < 0.5:
            a, b = sorted(rng.integers(0, SMALL_ADDR_COUNT, size=2).tolist())
            return IntervalSet.span(SMALL_ADDR_BASE + a, SMALL_ADDR_BASE + b)
        k = int(rng.integers(1, 4))
        return IntervalSet.from_spans(
            (SMALL_ADDR_BASE + int(i), SMALL_ADDR_BASE + int(i))
            for i in rng.integers(0, SMALL_ADDR_COUNT, size=k)
        )

    def app_constraint():
        k = int(rng.integers(1, 3))
        return frozenset(rng.choice(SMALL_APPS, size=k, replace=False).tolist())

    def proto_constraint():
        return frozenset([rng.choice(["tcp", "udp"])])

    def port_constraint():
        k = int(rng.integers(1, 3))
        return IntervalSet.from_spans(
            (int(p), int(p)) for p in rng.choice(SMALL_PORTS, size=k, replace=False)
        )

    fields = {}
    if rng.random() < 0.5:
        fields["from_zone"] = zone_constraint()
    if rng.random() < 0.5:
        fields["to_zone"] = zone_constraint()
    if rng.random() < 0.5:
        fields["src_ip"] = addr_constraint()
    if rng.random() < 0.5:
        fields["dst_ip"] = addr_constraint()
    if rng.random() < 0.5:
        fields["application"] = app_constraint()
    if rng.random() < 0.3:
        fields["protocol"] = proto_constraint()
    if rng.random() < 0.3:
        fields["dst_port"] = port_constraint()
    roll = rng.random()
    desired = None if roll < 0.2 else (Action.PERMIT if roll < 0.6 else Action.DENY)
    return SymbolicPacket(**fields), desired

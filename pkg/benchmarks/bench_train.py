"""Benchmark the compiled SGD kernel against the pure numpy fallback.

Usage: python benchmarks/bench_train.py [--pairs N] [--vocab V] [--dim D]
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from log2ns.embedding import (
    TrainingParams,
    available_backends,
    build_huffman,
    train_skipgram_hs,
)
from log2ns.embedding.vocab import vocabulary_from_counts
from log2ns.ingest import Token


def synthetic_workload(vocab_size: int, n_pairs: int, seed: int = 0):
    rng = np.random.default_rng(seed)
    # Zipf-ish frequencies: realistic Huffman depth spread
    freqs = {
        Token("ip", f"10.{i >> 8}.{i & 255}.1"): int(1 + vocab_size / (i + 1))
        for i in range(vocab_size)
    }
    vocab = vocabulary_from_counts(freqs)
    weights = np.array(vocab.frequencies, dtype=np.float64)
    weights /= weights.sum()
    ctx = rng.choice(vocab.size, size=n_pairs, p=weights)
    tgt = rng.choice(vocab.size, size=n_pairs, p=weights)
    pairs = np.stack([ctx, tgt, np.arange(n_pairs)], axis=1).astype(np.int32)
    return vocab, pairs


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--pairs", type=int, default=200_000)
    parser.add_argument("--vocab", type=int, default=2000)
    parser.add_argument("--dim", type=int, default=32)
    parser.add_argument("--epochs", type=int, default=1)
    args = parser.parse_args()

    vocab, pairs = synthetic_workload(args.vocab, args.pairs)
    tree = build_huffman(vocab)
    params = TrainingParams(dimension=args.dim, epochs=args.epochs, seed=3)
    presentations = args.pairs * args.epochs

    print(f"vocab={args.vocab} pairs={args.pairs} dim={args.dim} epochs={args.epochs}")
    timings: dict[str, float] = {}
    for backend in available_backends():
        start = time.perf_counter()
        model = train_skipgram_hs(pairs, vocab, tree=tree, params=params, backend=backend)
        elapsed = time.perf_counter() - start
        timings[backend] = elapsed
        rate = presentations / elapsed
        checksum = float(np.abs(model.input_vectors).sum())
        print(f"  {backend:>7}: {elapsed:7.2f}s  {rate:12,.0f} pairs/s  (checksum {checksum:.3f})")
    if "cython" in timings and "pure" in timings:
        print(f"  speedup: {timings['pure'] / timings['cython']:.1f}x")


if __name__ == "__main__":
    main()

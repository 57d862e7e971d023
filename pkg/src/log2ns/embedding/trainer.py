"""Skip-gram training over context-target pairs with hierarchical softmax.

The hot loop lives in a compiled extension when available; a pure numpy
kernel with the same update rule is selected at import time otherwise
(or when LOG2NS_PURE_PYTHON is set). Sequential mode is deterministic for
a fixed (pairs, hyperparameters, seed, backend).
"""

from __future__ import annotations

import os
from typing import Iterable

import numpy as np

from log2ns.embedding import _hs_pure
from log2ns.embedding.huffman import HuffmanTree, build_huffman
from log2ns.embedding.model import EmbeddingModel, TrainingParams, initialize_vectors
from log2ns.embedding.pairs import ContextTargetPair
from log2ns.embedding.vocab import Vocabulary

try:
    from log2ns.embedding import _hs_sgd
except ImportError:
    _hs_sgd = None


def available_backends() -> tuple[str, ...]:
    return ("cython", "pure") if _hs_sgd is not None else ("pure",)


def default_backend() -> str:
    if os.environ.get("LOG2NS_PURE_PYTHON"):
        return "pure"
    return "cython" if _hs_sgd is not None else "pure"


def _kernel(backend: str):
    if backend == "pure":
        return _hs_pure.train
    if backend == "cython":
        if _hs_sgd is None:
            raise RuntimeError("compiled kernel not available; rebuild or use backend='pure'")
        return _hs_sgd.train
    raise ValueError(f"unknown backend: {backend}")


def flatten_tree(tree: HuffmanTree):
    """CSR-style (bits, offsets, inner rows) arrays over leaf ids."""
    offsets = np.zeros(tree.leaf_count + 1, dtype=np.int64)
    for leaf in range(tree.leaf_count):
        offsets[leaf + 1] = offsets[leaf] + len(tree.codes[leaf])
    bits = np.empty(offsets[-1], dtype=np.int8)
    rows = np.empty(offsets[-1], dtype=np.int32)
    for leaf in range(tree.leaf_count):
        lo = offsets[leaf]
        for j, (bit, node) in enumerate(zip(tree.codes[leaf], tree.paths[leaf])):
            bits[lo + j] = bit
            rows[lo + j] = node
    return bits, offsets, rows


def pairs_to_array(pairs: Iterable[ContextTargetPair]) -> np.ndarray:
    """(n, 3) int32 array of (context_id, target_id, source_row)."""
    if isinstance(pairs, np.ndarray):
        arr = np.asarray(pairs, dtype=np.int32)
        if arr.ndim != 2 or arr.shape[1] != 3:
            raise ValueError("pairs array must have shape (n, 3)")
        return arr
    rows = [(p.context_id, p.target_id, p.source_row) for p in pairs]
    return np.array(rows, dtype=np.int32).reshape(-1, 3)


def train_skipgram_hs(
    pairs,
    vocab: Vocabulary,
    tree: HuffmanTree | None = None,
    params: TrainingParams | None = None,
    backend: str | None = None,
) -> EmbeddingModel:
    """Stochastic gradient ascent on sum(log p(target | context)).

    Pairs are presented in stream order, `params.epochs` times over; the
    learning rate decays linearly from `params.learning_rate` to 1e-4 of it.
    """
    params = params or TrainingParams()
    arr = pairs_to_array(pairs)
    if arr.shape[0] == 0:
        raise ValueError("empty pair stream: nothing to train")
    if tree is None:
        tree = build_huffman(vocab)
    if tree.leaf_count != vocab.size:
        raise ValueError("tree leaf count does not match vocabulary size")
    backend = backend or default_backend()
    kernel = _kernel(backend)

    input_vectors, inner_vectors = initialize_vectors(vocab.size, params.dimension, params.seed)
    bits, offsets, rows = flatten_tree(tree)
    ctx = np.ascontiguousarray(arr[:, 0], dtype=np.int32)
    tgt = np.ascontiguousarray(arr[:, 1], dtype=np.int32)
    if ctx.min() < 0 or ctx.max() >= vocab.size or tgt.min() < 0 or tgt.max() >= vocab.size:
        raise ValueError("pair ids outside vocabulary")

    kernel(
        input_vectors,
        inner_vectors,
        ctx,
        tgt,
        bits,
        offsets,
        rows,
        float(params.learning_rate),
        int(params.epochs),
    )
    if not (np.isfinite(input_vectors).all() and np.isfinite(inner_vectors).all()):
        raise ArithmeticError("training diverged: non-finite vectors")
    return EmbeddingModel(
        vocab=vocab,
        tree=tree,
        params=params,
        input_vectors=input_vectors,
        inner_vectors=inner_vectors,
        meta={"backend": backend, "pair_count": int(arr.shape[0])},
    )

"""Trained entity-embedding model and hierarchical-softmax math.

The probability of a target token given a context token is the product of
sigmoid decisions along the target's root-to-leaf path: sigma(x) for a
0-bit, 1 - sigma(x) for a 1-bit, with x the dot product of the context's
input vector and the inner node's vector.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from log2ns.ingest import Token
from log2ns.embedding.huffman import HuffmanTree
from log2ns.embedding.vocab import Vocabulary


@dataclass(frozen=True)
class TrainingParams:
    dimension: int = 32
    epochs: int = 5
    learning_rate: float = 0.025
    seed: int = 0

    def __post_init__(self):
        if self.dimension < 1:
            raise ValueError("dimension must be >= 1")
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be > 0")


@dataclass
class EmbeddingModel:
    """Input vectors are the embedding; inner vectors parameterize the tree."""

    vocab: Vocabulary
    tree: HuffmanTree
    params: TrainingParams
    input_vectors: np.ndarray   # (size, d) float32
    inner_vectors: np.ndarray   # (size - 1, d) float32
    meta: dict = field(default_factory=dict)

    @property
    def dimension(self) -> int:
        return int(self.input_vectors.shape[1])

    def vector(self, token: Token) -> np.ndarray:
        return self.input_vectors[self.vocab.id_of(token)]


def sigmoid(x: float) -> float:
    # exp overflow saturates cleanly through the 1/(1+inf) path
    if x >= 0:
        return 1.0 / (1.0 + np.exp(-x))
    z = np.exp(x)
    return z / (1.0 + z)


def _path_probability(context_vec, inner_vectors, code, path) -> float:
    v = np.asarray(context_vec, dtype=np.float64)
    p = 1.0
    for bit, node in zip(code, path):
        f = sigmoid(float(v @ np.asarray(inner_vectors[node], dtype=np.float64)))
        p *= f if bit == 0 else 1.0 - f
    return p


def hs_probability(model: EmbeddingModel, context: Token, target: Token) -> float:
    """Probability of `target` given `context` under the tree factorization."""
    c = model.vocab.id_of(context)
    t = model.vocab.id_of(target)
    return _path_probability(
        model.input_vectors[c], model.inner_vectors, model.tree.codes[t], model.tree.paths[t]
    )


def hs_probability_by_id(model: EmbeddingModel, context_id: int, target_id: int) -> float:
    return _path_probability(
        model.input_vectors[context_id],
        model.inner_vectors,
        model.tree.codes[target_id],
        model.tree.paths[target_id],
    )


def hs_log_probability(input_vectors, inner_vectors, tree: HuffmanTree, c: int, t: int) -> float:
    """log p(t|c), computed stably as a sum of -log(1+exp(-sign*x)) terms."""
    v = np.asarray(input_vectors[c], dtype=np.float64)
    total = 0.0
    for bit, node in zip(tree.codes[t], tree.paths[t]):
        x = float(v @ np.asarray(inner_vectors[node], dtype=np.float64))
        sign = 1.0 if bit == 0 else -1.0
        total += -np.logaddexp(0.0, -sign * x)
    return total


def hs_log_prob_gradients(input_vectors, inner_vectors, tree: HuffmanTree, c: int, t: int):
    """Gradient of log p(t|c) w.r.t. the context vector and each path node vector.

    Returns (grad_context, {inner_row: grad_vector}); all float64, evaluated
    simultaneously at the current parameters.
    """
    v = np.asarray(input_vectors[c], dtype=np.float64)
    grad_v = np.zeros_like(v)
    grad_inner: dict[int, np.ndarray] = {}
    for bit, node in zip(tree.codes[t], tree.paths[t]):
        u = np.asarray(inner_vectors[node], dtype=np.float64)
        f = sigmoid(float(v @ u))
        g = (1.0 - bit) - f
        grad_v += g * u
        grad_inner[node] = grad_inner.get(node, 0.0) + g * v
    return grad_v, grad_inner


def nearest_neighbors(model: EmbeddingModel, token: Token, k: int) -> list[tuple[Token, float]]:
    """Top-k tokens by cosine similarity of input vectors, query excluded, ties by id."""
    if k < 0:
        raise ValueError("k must be >= 0")
    q = model.vocab.id_of(token)
    if k == 0:
        return []
    mat = model.input_vectors.astype(np.float64)
    norms = np.linalg.norm(mat, axis=1)
    qv = mat[q]
    qn = norms[q]
    denom = norms * qn
    with np.errstate(invalid="ignore", divide="ignore"):
        sims = np.where(denom > 0, (mat @ qv) / np.where(denom == 0, 1.0, denom), 0.0)
    order = np.lexsort((np.arange(len(sims)), -sims))
    out: list[tuple[Token, float]] = []
    for idx in order:
        if idx == q:
            continue
        out.append((model.vocab.tokens[idx], float(sims[idx])))
        if len(out) == k:
            break
    return out


def initialize_vectors(size: int, dimension: int, seed: int):
    """Input rows uniform in [-0.5/d, 0.5/d]; inner rows zero."""
    rng = np.random.default_rng(seed)
    span = 0.5 / dimension
    input_vectors = rng.uniform(-span, span, size=(size, dimension)).astype(np.float32)
    inner_vectors = np.zeros((size - 1, dimension), dtype=np.float32)
    return input_vectors, inner_vectors


MODEL_MAGIC = "log2ns-embedding/1"


def model_to_bytes(model: EmbeddingModel) -> bytes:
    """Single-file container: one JSON metadata line, then the two dense
    little-endian float32 matrices (input, then inner), row-major."""
    from log2ns.embedding.vocab import vocabulary_to_text

    meta = {
        "format": MODEL_MAGIC,
        "dimension": model.dimension,
        "vocab_size": model.vocab.size,
        "params": {
            "dimension": model.params.dimension,
            "epochs": model.params.epochs,
            "learning_rate": model.params.learning_rate,
            "seed": model.params.seed,
        },
        "meta": model.meta,
        "vocabulary": vocabulary_to_text(model.vocab),
    }
    header = json.dumps(meta, sort_keys=True, separators=(",", ":")).encode() + b"\n"
    a = np.ascontiguousarray(model.input_vectors, dtype="<f4").tobytes()
    b = np.ascontiguousarray(model.inner_vectors, dtype="<f4").tobytes()
    return header + a + b


def model_from_bytes(data: bytes) -> EmbeddingModel:
    from log2ns.embedding.huffman import build_huffman
    from log2ns.embedding.vocab import vocabulary_from_text

    newline = data.index(b"\n")
    meta = json.loads(data[:newline])
    if meta.get("format") != MODEL_MAGIC:
        raise ValueError("not an embedding model file")
    size = meta["vocab_size"]
    d = meta["dimension"]
    body = data[newline + 1 :]
    n_in = size * d * 4
    input_vectors = np.frombuffer(body[:n_in], dtype="<f4").reshape(size, d).copy()
    inner_vectors = (
        np.frombuffer(body[n_in : n_in + (size - 1) * d * 4], dtype="<f4")
        .reshape(size - 1, d)
        .copy()
    )
    vocab = vocabulary_from_text(meta["vocabulary"])
    params = TrainingParams(**meta["params"])
    return EmbeddingModel(
        vocab=vocab,
        tree=build_huffman(vocab),
        params=params,
        input_vectors=input_vectors,
        inner_vectors=inner_vectors,
        meta=meta.get("meta", {}),
    )

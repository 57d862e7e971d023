"""Entity-embedding pipeline: vocabulary, pairs, Huffman tree, training."""

from log2ns.embedding.huffman import HuffmanTree, build_huffman, huffman_from_frequencies
from log2ns.embedding.model import (
    EmbeddingModel,
    TrainingParams,
    hs_log_prob_gradients,
    hs_log_probability,
    hs_probability,
    hs_probability_by_id,
    model_from_bytes,
    model_to_bytes,
    nearest_neighbors,
)
from log2ns.embedding.pairs import (
    DEFAULT_PAIR_ENTRIES,
    ContextTargetPair,
    PairSchema,
    generate_pairs,
)
from log2ns.embedding.trainer import (
    available_backends,
    default_backend,
    pairs_to_array,
    train_skipgram_hs,
)
from log2ns.embedding.vocab import (
    Vocabulary,
    build_vocabulary,
    vocabulary_from_text,
    vocabulary_to_text,
)

__all__ = [
    "ContextTargetPair",
    "DEFAULT_PAIR_ENTRIES",
    "EmbeddingModel",
    "HuffmanTree",
    "PairSchema",
    "TrainingParams",
    "Vocabulary",
    "available_backends",
    "build_huffman",
    "build_vocabulary",
    "default_backend",
    "generate_pairs",
    "hs_log_prob_gradients",
    "hs_log_probability",
    "hs_probability",
    "hs_probability_by_id",
    "huffman_from_frequencies",
    "model_from_bytes",
    "model_to_bytes",
    "nearest_neighbors",
    "pairs_to_array",
    "train_skipgram_hs",
    "vocabulary_from_text",
    "vocabulary_to_text",
]

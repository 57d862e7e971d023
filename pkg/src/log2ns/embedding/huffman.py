"""Frequency-based Huffman coding over vocabulary ids.

Leaves are vocabulary ids 0..size-1; inner nodes get ids size..2*size-2.
Merging pops the two smallest (frequency, id) entries; the first pop becomes
the left child and contributes bit 0 to the code.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass

from log2ns.embedding.vocab import Vocabulary


@dataclass(frozen=True)
class HuffmanTree:
    """Per-leaf binary code plus root-to-leaf path of inner-node ids.

    Inner-node ids in `paths` are offset so they index the inner-vector
    matrix directly: stored id = node_id - leaf_count.
    """

    leaf_count: int
    codes: tuple[tuple[int, ...], ...]   # bits, root to leaf
    paths: tuple[tuple[int, ...], ...]   # inner rows, root to leaf

    @property
    def inner_count(self) -> int:
        return self.leaf_count - 1

    def code_length(self, leaf: int) -> int:
        return len(self.codes[leaf])


def build_huffman(vocab: Vocabulary) -> HuffmanTree:
    return huffman_from_frequencies(vocab.frequencies)


def huffman_from_frequencies(frequencies) -> HuffmanTree:
    n = len(frequencies)
    if n < 2:
        raise ValueError("huffman tree needs at least 2 leaves")

    # heap entries: (frequency, node_id); ids < n are leaves
    heap: list[tuple[int, int]] = [(f, i) for i, f in enumerate(frequencies)]
    heapq.heapify(heap)
    children: dict[int, tuple[int, int]] = {}
    next_id = n
    while len(heap) > 1:
        fa, a = heapq.heappop(heap)
        fb, b = heapq.heappop(heap)
        children[next_id] = (a, b)
        heapq.heappush(heap, (fa + fb, next_id))
        next_id += 1
    root = heap[0][1]

    codes: list[tuple[int, ...]] = [()] * n
    paths: list[tuple[int, ...]] = [()] * n
    stack = [(root, (), ())]
    while stack:
        node, bits, inner = stack.pop()
        if node < n:
            codes[node] = bits
            paths[node] = inner
            continue
        left, right = children[node]
        inner_next = inner + (node - n,)
        stack.append((left, bits + (0,), inner_next))
        stack.append((right, bits + (1,), inner_next))
    return HuffmanTree(n, tuple(codes), tuple(paths))

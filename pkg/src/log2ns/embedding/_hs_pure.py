"""Pure numpy fallback for the hierarchical-softmax SGD kernel.

Same update rule and pair order as the compiled kernel; float32 parameters,
one gradient-ascent step per pair presentation, learning rate decaying
linearly to 1e-4 of its initial value.
"""

from __future__ import annotations

import numpy as np


def train(
    input_vectors: np.ndarray,
    inner_vectors: np.ndarray,
    ctx: np.ndarray,
    tgt: np.ndarray,
    code_bits: np.ndarray,
    code_offsets: np.ndarray,
    point_rows: np.ndarray,
    alpha0: float,
    epochs: int,
) -> None:
    n = int(ctx.shape[0])
    total = float(epochs) * n
    floor = alpha0 * 1e-4
    processed = 0
    with np.errstate(over="ignore"):
        for _ in range(epochs):
            for i in range(n):
                alpha = alpha0 * (1.0 - processed / total)
                if alpha < floor:
                    alpha = floor
                c = ctx[i]
                t = tgt[i]
                lo = code_offsets[t]
                hi = code_offsets[t + 1]
                nodes = point_rows[lo:hi]
                bits = code_bits[lo:hi]
                v = input_vectors[c]
                u = inner_vectors[nodes]                      # (L, d) snapshot
                x = u @ v
                f = np.where(x >= 0, 1.0 / (1.0 + np.exp(-x)), np.exp(x) / (1.0 + np.exp(x)))
                g = ((1.0 - bits - f) * alpha).astype(np.float32)
                e = g @ u
                inner_vectors[nodes] += g[:, None] * v[None, :]
                input_vectors[c] += e
                processed += 1

# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled hierarchical-softmax SGD kernel (hot training loop)."""

from libc.math cimport exp
from libc.stdlib cimport free, malloc


def train(
    float[:, ::1] input_vectors,
    float[:, ::1] inner_vectors,
    int[::1] ctx,
    int[::1] tgt,
    signed char[::1] code_bits,
    long long[::1] code_offsets,
    int[::1] point_rows,
    double alpha0,
    int epochs,
):
    cdef Py_ssize_t n = ctx.shape[0]
    cdef Py_ssize_t d = input_vectors.shape[1]
    cdef double total = <double> epochs * <double> n
    cdef double floor_alpha = alpha0 * 1e-4
    cdef double processed = 0.0
    cdef double alpha, x, f, g
    cdef Py_ssize_t epoch, i, j, s, c, t, node
    cdef long long lo, hi
    cdef float* work = <float*> malloc(d * sizeof(float))
    if work == NULL:
        raise MemoryError()
    try:
        with nogil:
            for epoch in range(epochs):
                for i in range(n):
                    alpha = alpha0 * (1.0 - processed / total)
                    if alpha < floor_alpha:
                        alpha = floor_alpha
                    c = ctx[i]
                    t = tgt[i]
                    for j in range(d):
                        work[j] = 0.0
                    lo = code_offsets[t]
                    hi = code_offsets[t + 1]
                    for s in range(lo, hi):
                        node = point_rows[s]
                        x = 0.0
                        for j in range(d):
                            x += input_vectors[c, j] * inner_vectors[node, j]
                        f = 1.0 / (1.0 + exp(-x))
                        g = (1.0 - code_bits[s] - f) * alpha
                        for j in range(d):
                            work[j] += <float> (g * inner_vectors[node, j])
                            inner_vectors[node, j] += <float> (g * input_vectors[c, j])
                    for j in range(d):
                        input_vectors[c, j] += work[j]
                    processed += 1.0
    finally:
        free(work)

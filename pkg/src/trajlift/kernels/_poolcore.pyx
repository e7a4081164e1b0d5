# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled temporal pooling kernels (hot path of the network forward/backward)."""
import numpy as np

cimport numpy as cnp

cnp.import_array()


def avg_pool_forward(double[:, ::1] rows, int window):
    """Centered moving average with replicate padding; rows is (n, F)."""
    cdef Py_ssize_t n = rows.shape[0]
    cdef Py_ssize_t frames = rows.shape[1]
    cdef int half = window // 2
    out_arr = np.empty((n, frames))
    cdef double[:, ::1] out = out_arr
    cdef Py_ssize_t i, f, idx
    cdef int d
    cdef double acc
    for i in range(n):
        for f in range(frames):
            acc = 0.0
            for d in range(-half, half + 1):
                idx = f + d
                if idx < 0:
                    idx = 0
                elif idx >= frames:
                    idx = frames - 1
                acc += rows[i, idx]
            out[i, f] = acc / window
    return out_arr


def avg_pool_backward(double[:, ::1] grad, int window):
    """Adjoint of avg_pool_forward; grad is (n, F)."""
    cdef Py_ssize_t n = grad.shape[0]
    cdef Py_ssize_t frames = grad.shape[1]
    cdef int half = window // 2
    out_arr = np.zeros((n, frames))
    cdef double[:, ::1] out = out_arr
    cdef Py_ssize_t i, f, idx
    cdef int d
    cdef double inv = 1.0 / window
    for i in range(n):
        for f in range(frames):
            for d in range(-half, half + 1):
                idx = f + d
                if idx < 0:
                    idx = 0
                elif idx >= frames:
                    idx = frames - 1
                out[i, idx] += grad[i, f] * inv
    return out_arr

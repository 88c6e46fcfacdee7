"""Compiled row-parallel kernels for CSR matrices and row-major blocks.

Rows are split into a fixed number of contiguous chunks that does not depend
on the thread count. Reductions are formed per chunk and then combined in
chunk order, so results are bitwise reproducible for any number of threads.
"""
import warnings

import numpy as np
from numba import njit, prange

# numba falls back to OpenMP when the installed TBB is too old; that is fine
warnings.filterwarnings("ignore", message="The TBB threading layer requires")

MAX_CHUNKS = 64
MIN_CHUNK_ROWS = 512


def chunk_offsets(dim):
    """Row boundaries of the fixed reduction chunks for a dimension."""
    rows = max(MIN_CHUNK_ROWS, -(-dim // MAX_CHUNKS))
    nchunks = max(1, -(-dim // rows))
    return np.minimum(np.arange(nchunks + 1, dtype=np.int64) * rows, dim)


@njit(parallel=True, cache=True)
def spmmvm(indptr, indices, data, X, alpha, beta, Y):
    dim, nb = X.shape
    for i in prange(dim):
        for k in range(nb):
            Y[i, k] = 0.0
        for jj in range(indptr[i], indptr[i + 1]):
            j = indices[jj]
            a = data[jj]
            for k in range(nb):
                Y[i, k] += a * X[j, k]
        for k in range(nb):
            Y[i, k] = alpha * Y[i, k] + beta * X[i, k]


@njit(cache=True)
def merge_parts(parts, out):
    # parts: (nchunks, nb); ordered compensated sum over the chunk axis
    nchunks, nb = parts.shape
    for k in range(nb):
        s = parts[0, k] * 0.0
        c = s
        for p in range(nchunks):
            y = parts[p, k] - c
            t = s + y
            c = (t - s) - y
            s = t
        out[k] = s


@njit(parallel=True, cache=True)
def cheb_step(indptr, indices, data, U, W, X, R, alpha, beta, coeff,
              want_dots, offsets, parts):
    """W <- 2(alpha A + beta I)U - W ; X <- X + coeff W ; parts <- <R, W>."""
    dim, nb = U.shape
    nchunks = offsets.shape[0] - 1
    for p in prange(nchunks):
        acc = np.empty(nb, dtype=U.dtype)
        s = np.zeros(nb, dtype=U.dtype)
        comp = np.zeros(nb, dtype=U.dtype)
        for i in range(offsets[p], offsets[p + 1]):
            for k in range(nb):
                acc[k] = 0.0
            for jj in range(indptr[i], indptr[i + 1]):
                j = indices[jj]
                a = data[jj]
                for k in range(nb):
                    acc[k] += a * U[j, k]
            for k in range(nb):
                w = 2.0 * (alpha * acc[k] + beta * U[i, k]) - W[i, k]
                if want_dots:
                    y = np.conj(R[i, k]) * w - comp[k]
                    t = s[k] + y
                    comp[k] = (t - s[k]) - y
                    s[k] = t
                W[i, k] = w
                X[i, k] += coeff * w
        for k in range(nb):
            parts[p, k] = s[k]


@njit(parallel=True, cache=True)
def axpy_scal(X, U, W, c0, c1, c2):
    dim, nb = X.shape
    for i in prange(dim):
        for k in range(nb):
            X[i, k] = c0 * X[i, k] + c1 * U[i, k] + c2 * W[i, k]


@njit(parallel=True, cache=True)
def column_dots(X, Y, offsets, parts):
    nb = X.shape[1]
    nchunks = offsets.shape[0] - 1
    for p in prange(nchunks):
        s = np.zeros(nb, dtype=parts.dtype)
        comp = np.zeros(nb, dtype=parts.dtype)
        for i in range(offsets[p], offsets[p + 1]):
            for k in range(nb):
                y = np.conj(X[i, k]) * Y[i, k] - comp[k]
                t = s[k] + y
                comp[k] = (t - s[k]) - y
                s[k] = t
        for k in range(nb):
            parts[p, k] = s[k]


@njit(parallel=True, cache=True)
def gram_parts(X, Y, offsets, parts, upper_only):
    """parts[p, k, l] = compensated sum over chunk p of conj(X[i,k]) Y[i,l]."""
    nbx = X.shape[1]
    nby = Y.shape[1]
    nchunks = offsets.shape[0] - 1
    for p in prange(nchunks):
        s = np.zeros((nbx, nby), dtype=parts.dtype)
        comp = np.zeros((nbx, nby), dtype=parts.dtype)
        for i in range(offsets[p], offsets[p + 1]):
            for k in range(nbx):
                xk = np.conj(X[i, k])
                l0 = k if upper_only else 0
                for l in range(l0, nby):
                    y = xk * Y[i, l] - comp[k, l]
                    t = s[k, l] + y
                    comp[k, l] = (t - s[k, l]) - y
                    s[k, l] = t
        parts[p] = s


@njit(cache=True)
def gram_merge(parts, out):
    nchunks, nbx, nby = parts.shape
    for k in range(nbx):
        for l in range(nby):
            s = parts[0, k, l] * 0.0
            c = s
            for p in range(nchunks):
                y = parts[p, k, l] - c
                t = s + y
                c = (t - s) - y
                s = t
            out[k, l] = s

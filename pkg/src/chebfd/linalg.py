"""Sparse matrix and block-vector storage with the fused Chebyshev kernels.

A block vector is a C-contiguous ``(D, n_b)`` ndarray: entry ``(i, k)`` sits
at flat offset ``i * n_b + k``, so the ``n_b`` values of one row are adjacent
in memory. All kernels here require that layout and never copy to fix it.
"""
from __future__ import annotations

import os
from dataclasses import dataclass
from enum import Enum

import numpy as np
import scipy.sparse as sp

from . import _kernels


class ScalarKind(str, Enum):
    REAL64 = "real64"
    COMPLEX128 = "complex128"

    @property
    def dtype(self) -> np.dtype:
        return np.dtype(np.float64 if self is ScalarKind.REAL64 else np.complex128)

    @classmethod
    def of(cls, dtype) -> "ScalarKind":
        dtype = np.dtype(dtype)
        if dtype == np.float64:
            return cls.REAL64
        if dtype == np.complex128:
            return cls.COMPLEX128
        raise TypeError(f"unsupported scalar type {dtype}")


@dataclass(frozen=True)
class SparseMatrix:
    """Square CSR matrix; the arrays are made read-only on construction.

    Attributes:
        dim: Matrix dimension D.
        row_offsets: int64 array of length D+1.
        col_indices: int32 column index per stored entry.
        values: float64 or complex128 values.
        hermitian: Whether the matrix is declared symmetric/Hermitian.
    """

    dim: int
    row_offsets: np.ndarray
    col_indices: np.ndarray
    values: np.ndarray
    hermitian: bool = True

    def __post_init__(self):
        ro = np.ascontiguousarray(self.row_offsets, dtype=np.int64)
        ci = np.ascontiguousarray(self.col_indices, dtype=np.int32)
        vals = np.ascontiguousarray(self.values)
        ScalarKind.of(vals.dtype)
        if self.dim < 1:
            raise ValueError("dim must be positive")
        if ro.shape != (self.dim + 1,) or ro[0] != 0 or np.any(np.diff(ro) < 0):
            raise ValueError("row_offsets must be nondecreasing, length D+1, start at 0")
        if ro[-1] != ci.size or ci.size != vals.size:
            raise ValueError("row_offsets[D] must equal the number of stored entries")
        if ci.size and (ci.min() < 0 or ci.max() >= self.dim):
            raise ValueError("column index out of range")
        for name, arr in (("row_offsets", ro), ("col_indices", ci), ("values", vals)):
            arr.flags.writeable = False
            object.__setattr__(self, name, arr)

    @property
    def kind(self) -> ScalarKind:
        return ScalarKind.of(self.values.dtype)

    @property
    def dtype(self) -> np.dtype:
        return self.values.dtype

    @property
    def nnz(self) -> int:
        return int(self.values.size)

    @property
    def nnz_per_row(self) -> float:
        return self.nnz / self.dim

    @classmethod
    def from_scipy(cls, mat, hermitian: bool = True) -> "SparseMatrix":
        csr = sp.csr_matrix(mat)
        csr.sum_duplicates()
        csr.sort_indices()
        if not np.iscomplexobj(csr.data):
            csr = csr.astype(np.float64)
        if csr.shape[0] != csr.shape[1]:
            raise ValueError("matrix must be square")
        return cls(csr.shape[0], csr.indptr, csr.indices, csr.data, hermitian)

    @classmethod
    def from_dense(cls, mat, hermitian: bool = True) -> "SparseMatrix":
        return cls.from_scipy(sp.csr_matrix(np.asarray(mat)), hermitian)

    @classmethod
    def diagonal(cls, diag) -> "SparseMatrix":
        diag = np.asarray(diag)
        d = diag.size
        return cls(d, np.arange(d + 1), np.arange(d), diag, True)

    def to_scipy(self) -> sp.csr_matrix:
        return sp.csr_matrix(
            (np.array(self.values), np.array(self.col_indices), np.array(self.row_offsets)),
            shape=(self.dim, self.dim),
        )

    def to_dense(self) -> np.ndarray:
        return self.to_scipy().toarray()

    def check_hermitian(self, tol: float = 0.0) -> bool:
        """Full scan: every stored (i, j, v) has a stored (j, i, conj(v))."""
        csr = self.to_scipy()
        diff = csr - csr.conj().T
        if diff.nnz == 0:
            return True
        return bool(np.max(np.abs(diff.data)) <= tol)


def block_vector(dim: int, width: int, kind=ScalarKind.REAL64) -> np.ndarray:
    """Zero-initialised row-major block of ``width`` vectors of length ``dim``."""
    return np.zeros((dim, width), dtype=ScalarKind(kind).dtype)


def random_block(dim: int, width: int, rng: np.random.Generator, kind=ScalarKind.REAL64,
                 normalize: bool = True) -> np.ndarray:
    """Gaussian random block, columns scaled to unit norm by default."""
    kind = ScalarKind(kind)
    X = rng.standard_normal((dim, width))
    if kind is ScalarKind.COMPLEX128:
        X = (X + 1j * rng.standard_normal((dim, width))) / np.sqrt(2.0)
    if normalize:
        X /= np.linalg.norm(X, axis=0)
    return np.ascontiguousarray(X)


def _check_block(X, dim=None, name="X"):
    if not isinstance(X, np.ndarray) or X.ndim != 2:
        raise TypeError(f"{name} must be a 2-d ndarray block")
    if not X.flags.c_contiguous:
        raise ValueError(f"{name} must be row-major (C-contiguous)")
    if dim is not None and X.shape[0] != dim:
        raise ValueError(f"dimension mismatch: {name} has {X.shape[0]} rows, expected {dim}")
    ScalarKind.of(X.dtype)


def _check_same(*blocks):
    shape, dtype = blocks[0][1].shape, blocks[0][1].dtype
    for name, B in blocks:
        _check_block(B, name=name)
        if B.shape != shape:
            raise ValueError(f"dimension mismatch: {name} has shape {B.shape}, expected {shape}")
        if B.dtype != dtype:
            raise TypeError(f"scalar-kind mismatch: {name} is {B.dtype}, expected {dtype}")


def _check_kind(A: SparseMatrix, X):
    if A.dtype != X.dtype:
        raise TypeError(f"scalar-kind mismatch: matrix is {A.dtype}, block is {X.dtype}")


def spmmvm(A: SparseMatrix, X: np.ndarray, alpha=1.0, beta=0.0, out=None) -> np.ndarray:
    """Y = (alpha A + beta I) X for all columns of the block in one sweep."""
    _check_block(X, A.dim)
    _check_kind(A, X)
    Y = np.empty_like(X) if out is None else out
    _check_same(("X", X), ("out", Y))
    if np.shares_memory(X, Y):
        raise ValueError("output must not alias the input block")
    s = X.dtype.type
    _kernels.spmmvm(A.row_offsets, A.col_indices, A.values, X, s(alpha), s(beta), Y)
    return Y


def spmmvm_fused(A: SparseMatrix, U, W, X, alpha, beta, coeff, want_dots=False,
                 dot_ref=None):
    """One fused Chebyshev step, updating W and X in place.

    Computes ``W <- 2 (alpha A + beta I) U - W`` and ``X <- X + coeff W``.
    With ``want_dots`` also returns ``d_k = <r_k, w_k(new)>`` accumulated with
    compensated summation, where ``r`` is ``dot_ref`` if given and otherwise
    the value of ``X`` before the update.

    Returns:
        ``(W, X, dots)``; ``dots`` is None unless requested.
    """
    _check_same(("U", U), ("W", W), ("X", X))
    _check_block(U, A.dim, "U")
    _check_kind(A, U)
    if np.shares_memory(U, W) or np.shares_memory(U, X) or np.shares_memory(W, X):
        raise ValueError("U, W and X must be distinct storage")
    if dot_ref is None:
        # the kernel reads x_k(i) before overwriting it, so aliasing X is exact
        ref = X
    else:
        _check_same(("U", U), ("dot_ref", dot_ref))
        if np.shares_memory(dot_ref, W) or np.shares_memory(dot_ref, U):
            raise ValueError("dot_ref must not alias U or W")
        ref = dot_ref
    s = U.dtype.type
    offsets = _kernels.chunk_offsets(A.dim)
    parts = np.zeros((offsets.size - 1, U.shape[1]), dtype=U.dtype)
    _kernels.cheb_step(A.row_offsets, A.col_indices, A.values, U, W, X, ref,
                       s(alpha), s(beta), s(coeff), bool(want_dots), offsets, parts)
    dots = None
    if want_dots:
        dots = np.empty(U.shape[1], dtype=U.dtype)
        _kernels.merge_parts(parts, dots)
    return W, X, dots


def block_axpy_scal(X, U, W, c0, c1, c2) -> np.ndarray:
    """X <- c0 X + c1 U + c2 W, in place."""
    _check_same(("X", X), ("U", U), ("W", W))
    s = X.dtype.type
    _kernels.axpy_scal(X, U, W, s(c0), s(c1), s(c2))
    return X


def column_dots(X, Y) -> np.ndarray:
    """d_k = <x_k, y_k> with compensated, fixed-order accumulation."""
    _check_same(("X", X), ("Y", Y))
    offsets = _kernels.chunk_offsets(X.shape[0])
    parts = np.zeros((offsets.size - 1, X.shape[1]), dtype=X.dtype)
    _kernels.column_dots(X, Y, offsets, parts)
    out = np.empty(X.shape[1], dtype=X.dtype)
    _kernels.merge_parts(parts, out)
    return out


def gram(X, Y=None) -> np.ndarray:
    """G(k, l) = <x_k, y_l> with Kahan-compensated, fixed-order sums.

    When ``Y`` is omitted (or is ``X``) only the upper triangle is accumulated
    and the result is mirrored, so it is exactly Hermitian.
    """
    same = Y is None or Y is X
    if same:
        Y = X
    _check_block(X, name="X")
    _check_block(Y, X.shape[0], "Y")
    if X.dtype != Y.dtype:
        raise TypeError("scalar-kind mismatch between X and Y")
    offsets = _kernels.chunk_offsets(X.shape[0])
    parts = np.zeros((offsets.size - 1, X.shape[1], Y.shape[1]), dtype=X.dtype)
    _kernels.gram_parts(X, Y, offsets, parts, same)
    G = np.empty((X.shape[1], Y.shape[1]), dtype=X.dtype)
    _kernels.gram_merge(parts, G)
    if same:
        iu = np.triu_indices(X.shape[1], 1)
        G[iu[1], iu[0]] = np.conj(G[iu])
        G[np.diag_indices_from(G)] = G.diagonal().real
    return G


def set_threads(n: int | None = None) -> int:
    """Set the kernel thread count; ``CHEBFD_THREADS`` overrides the argument."""
    import numba

    env = os.environ.get("CHEBFD_THREADS")
    if env:
        n = int(env)
    if n is None:
        return numba.get_num_threads()
    n = max(1, min(int(n), numba.config.NUMBA_NUM_THREADS))
    numba.set_num_threads(n)
    return n

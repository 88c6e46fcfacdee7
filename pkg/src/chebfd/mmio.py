"""Matrix Market ingestion/export and the binary block-vector dump.

Block file layout (little endian)::

    8 bytes  magic  b"CHFDBLK1"
    uint64   D
    uint64   n_b
    uint8    scalar kind (0 = real64, 1 = complex128)
    7 bytes  zero padding
    payload  D * n_b scalars, row-major
"""
from __future__ import annotations

import struct
from pathlib import Path

import numpy as np
import scipy.io
import scipy.sparse as sp

from .linalg import ScalarKind, SparseMatrix

_MAGIC = b"CHFDBLK1"
_HEADER = struct.Struct("<8sQQB7x")
_KIND_CODES = {ScalarKind.REAL64: 0, ScalarKind.COMPLEX128: 1}


def read_matrix_market(path) -> SparseMatrix:
    """Read a coordinate Matrix Market file (general, symmetric or hermitian)."""
    with open(path, "rb") as fh:
        header = fh.readline().decode("ascii", "replace").lower().split()
    if len(header) < 5 or header[0] != "%%matrixmarket" or header[2] != "coordinate":
        raise ValueError(f"{path}: not a coordinate Matrix Market file")
    field_, symmetry = header[3], header[4]
    if field_ not in ("real", "complex", "integer"):
        raise ValueError(f"{path}: unsupported field {field_!r}")
    if symmetry not in ("general", "symmetric", "hermitian"):
        raise ValueError(f"{path}: unsupported symmetry {symmetry!r}")
    mat = sp.csr_matrix(scipy.io.mmread(str(path)))
    if field_ != "complex":
        mat = mat.astype(np.float64)
    A = SparseMatrix.from_scipy(mat, hermitian=True)
    if symmetry == "general" and not A.check_hermitian(tol=1e-14 * max(1.0, np.abs(A.values).max(initial=0.0))):
        A = SparseMatrix.from_scipy(mat, hermitian=False)
    return A


def write_matrix_market(path, A: SparseMatrix, comment: str = "") -> Path:
    """Write ``A`` in coordinate format, using the symmetric/hermitian header when valid."""
    path = Path(path)
    mat = A.to_scipy().tocoo()
    symmetry = "general"
    if A.hermitian and A.check_hermitian():
        symmetry = "hermitian" if A.kind is ScalarKind.COMPLEX128 else "symmetric"
    scipy.io.mmwrite(str(path), mat, comment=comment, field=None, precision=17, symmetry=symmetry)
    return path if path.suffix else path.with_suffix(".mtx")


def save_block(path, X: np.ndarray) -> None:
    kind = ScalarKind.of(X.dtype)
    X = np.ascontiguousarray(X, dtype=kind.dtype.newbyteorder("<"))
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(_MAGIC, X.shape[0], X.shape[1], _KIND_CODES[kind]))
        fh.write(X.tobytes(order="C"))


def load_block(path) -> np.ndarray:
    with open(path, "rb") as fh:
        magic, dim, width, code = _HEADER.unpack(fh.read(_HEADER.size))
        if magic != _MAGIC:
            raise ValueError(f"{path}: not a block-vector file")
        kind = {v: k for k, v in _KIND_CODES.items()}[code]
        dtype = kind.dtype.newbyteorder("<")
        payload = fh.read()
    if len(payload) != dim * width * dtype.itemsize:
        raise ValueError(f"{path}: payload length does not match header")
    X = np.frombuffer(payload, dtype=dtype).reshape(dim, width)
    return np.ascontiguousarray(X, dtype=kind.dtype)

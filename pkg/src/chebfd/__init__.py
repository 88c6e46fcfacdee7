"""Chebyshev filter diagonalization for interior eigenvalues of sparse Hermitian matrices."""
from .filters import FEJER, JACKSON, LANCZOS, NONE, FilterPolynomial, KernelKind, apply_filter
from .linalg import ScalarKind, SparseMatrix, gram, random_block, spmmvm, spmmvm_fused

__version__ = "0.1.0"

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from chebfd import linalg
from chebfd.linalg import ScalarKind, SparseMatrix, block_axpy_scal, column_dots, gram, \
    random_block, spmmvm, spmmvm_fused

from conftest import random_hermitian


def test_rejects_bad_csr():
    with pytest.raises(ValueError):
        SparseMatrix(2, np.array([0, 1]), np.array([0]), np.array([1.0]))
    with pytest.raises(ValueError):
        SparseMatrix(2, np.array([0, 1, 1]), np.array([5]), np.array([1.0]))
    with pytest.raises(TypeError):
        SparseMatrix(1, np.array([0, 1]), np.array([0]), np.array([1], dtype=np.float32))


def test_arrays_are_read_only(herm):
    with pytest.raises(ValueError):
        herm.values[0] = 1.0


def test_hermitian_scan(herm):
    assert herm.check_hermitian()
    bad = SparseMatrix.from_dense(np.array([[0.0, 1.0], [2.0, 0.0]]))
    assert not bad.check_hermitian()


def test_spmmvm_matches_scipy(herm, rng):
    X = random_block(herm.dim, 5, rng, herm.kind)
    Y = spmmvm(herm, X, 0.5, -0.25)
    ref = 0.5 * (herm.to_scipy() @ X) - 0.25 * X
    np.testing.assert_allclose(Y, ref, atol=1e-13)


def test_fused_step_matches_recurrence(herm, rng):
    U = random_block(herm.dim, 4, rng, herm.kind)
    W = random_block(herm.dim, 4, rng, herm.kind)
    X = random_block(herm.dim, 4, rng, herm.kind)
    R = random_block(herm.dim, 4, rng, herm.kind)
    H = herm.to_scipy()
    W_ref = 2 * (0.3 * (H @ U) + 0.1 * U) - W
    X_ref = X + 0.7 * W_ref
    d_ref = np.einsum("ik,ik->k", R.conj(), W_ref)
    _, _, d = spmmvm_fused(herm, U, W, X, 0.3, 0.1, 0.7, want_dots=True, dot_ref=R)
    np.testing.assert_allclose(W, W_ref, atol=1e-13)
    np.testing.assert_allclose(X, X_ref, atol=1e-13)
    np.testing.assert_allclose(d, d_ref, atol=1e-12)


def test_fused_default_dots_use_old_x(herm, rng):
    U, W, X = (random_block(herm.dim, 3, rng, herm.kind) for _ in range(3))
    X_old = X.copy()
    W_ref = 2 * (herm.to_scipy() @ U) - W
    _, _, d = spmmvm_fused(herm, U, W, X, 1.0, 0.0, 2.0, want_dots=True)
    np.testing.assert_allclose(d, np.einsum("ik,ik->k", X_old.conj(), W_ref), atol=1e-12)


def test_errors_on_aliasing_and_mismatch(herm, rng):
    X = random_block(herm.dim, 2, rng, herm.kind)
    with pytest.raises(ValueError):
        spmmvm(herm, X, out=X)
    with pytest.raises(ValueError):
        spmmvm_fused(herm, X, X, X.copy(), 1, 0, 1)
    with pytest.raises(ValueError):
        spmmvm(herm, random_block(herm.dim + 1, 2, rng, herm.kind))
    other = ScalarKind.REAL64 if herm.kind is ScalarKind.COMPLEX128 else ScalarKind.COMPLEX128
    with pytest.raises(TypeError):
        spmmvm(herm, random_block(herm.dim, 2, rng, other))
    with pytest.raises(ValueError):
        spmmvm(herm, np.asfortranarray(random_block(herm.dim, 3, rng, herm.kind)))


def test_axpy_and_dots(rng):
    X, U, W = (random_block(700, 3, rng) for _ in range(3))
    ref = 2 * X - U + 0.5 * W
    block_axpy_scal(X, U, W, 2.0, -1.0, 0.5)
    np.testing.assert_allclose(X, ref, atol=1e-14)
    np.testing.assert_allclose(column_dots(X, U), np.sum(X * U, axis=0), rtol=1e-13)


@pytest.mark.parametrize("kind", list(ScalarKind))
def test_gram_is_exactly_hermitian(kind, rng):
    X = random_block(3000, 7, rng, kind)
    G = gram(X)
    assert np.array_equal(G, G.conj().T)
    assert np.all(G.diagonal().imag == 0)
    np.testing.assert_allclose(G, X.conj().T @ X, atol=1e-13)
    Y = random_block(3000, 4, rng, kind)
    np.testing.assert_allclose(gram(X, Y), X.conj().T @ Y, atol=1e-13)


def test_compensated_sum_beats_naive():
    # 1 + 1000 * 1e-16: a plain running sum never leaves 1.0
    y = np.full((1001, 1), 1e-16)
    y[0] = 1.0
    x = np.ones_like(y)
    exact = math.fsum(y[:, 0])
    naive = 0.0
    for v in y[:, 0]:
        naive += v
    assert naive == 1.0
    assert abs(column_dots(x, y)[0] - exact) <= 1e-16
    assert abs(gram(x, y)[0, 0] - exact) <= 1e-16


def test_chunk_partition_is_thread_independent():
    off = linalg._kernels.chunk_offsets(100000)
    assert off[0] == 0 and off[-1] == 100000
    assert len(off) - 1 <= linalg._kernels.MAX_CHUNKS
    assert np.array_equal(off, linalg._kernels.chunk_offsets(100000))


def test_repeatable_bitwise(rng):
    A = random_hermitian(3000, density=0.002, seed=3)
    X = random_block(A.dim, 8, rng)
    r1 = spmmvm_fused(A, X.copy(), X.copy() * 0.5, X.copy(), 0.2, 0.0, 1.0, True)[2]
    r2 = spmmvm_fused(A, X.copy(), X.copy() * 0.5, X.copy(), 0.2, 0.0, 1.0, True)[2]
    assert np.array_equal(r1, r2)


@settings(max_examples=25, deadline=None)
@given(st.integers(1, 40), st.integers(1, 6), st.floats(-3, 3), st.floats(-3, 3),
       st.integers(0, 10_000))
def test_spmmvm_is_linear(n, nb, a, b, seed):
    A = random_hermitian(n, density=0.3, seed=seed)
    rng = np.random.default_rng(seed)
    X = random_block(n, nb, rng, normalize=False)
    Y = random_block(n, nb, rng, normalize=False)
    lhs = spmmvm(A, np.ascontiguousarray(a * X + b * Y))
    rhs = a * spmmvm(A, X) + b * spmmvm(A, Y)
    np.testing.assert_allclose(lhs, rhs, atol=1e-11 * (1 + abs(a) + abs(b)) * n)


@settings(max_examples=20, deadline=None)
@given(st.integers(1, 5), st.integers(2, 30), st.integers(0, 1000))
def test_block_equals_column_by_column(nb, n, seed):
    A = random_hermitian(n, density=0.4, complex_=True, seed=seed)
    X = random_block(n, nb, np.random.default_rng(seed), A.kind)
    Y = spmmvm(A, X)
    for k in range(nb):
        yk = spmmvm(A, np.ascontiguousarray(X[:, k:k + 1]))
        assert np.array_equal(Y[:, k:k + 1], yk)

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import quad

from chebfd.filters import FilterPolynomial, apply_filter
from chebfd.linalg import SparseMatrix, random_block
from chebfd.models import LatticeSpec, diag_flat, diag_linear, gamma_matrices, \
    topological_insulator
from chebfd.probe import AnalyticDos, DosEstimate, estimate_count, kpm_dos, lanczos_bounds, \
    weight_density


@pytest.fixture(scope="module")
def flat_dos():
    return kpm_dos(diag_flat(40000), (-1, 1), M=2000, R=32, seed=11)


def test_lanczos_bounds_diag():
    a, b = lanczos_bounds(SparseMatrix.diagonal(np.linspace(-1, 1, 2000)), 30, seed=0)
    assert a <= -1 and b >= 1
    assert b - a <= 1.05 * 2


def test_lanczos_bounds_dense_oracle():
    rng = np.random.default_rng(2)
    M = rng.standard_normal((300, 300))
    M = M + M.T
    w = np.linalg.eigvalsh(M)
    a, b = lanczos_bounds(SparseMatrix.from_dense(M), 30, seed=3)
    assert a <= w[0] and w[-1] <= b


def test_lanczos_bounds_survive_breakdown():
    # three distinct eigenvalues: the Krylov space is exhausted after 3 steps
    A = SparseMatrix.diagonal(np.repeat([-2.0, 0.5, 3.0], 50))
    a, b = lanczos_bounds(A, 20, seed=1)
    assert a <= -2 and b >= 3
    with pytest.raises(ValueError):
        lanczos_bounds(A, 1)


def test_lanczos_bounds_insulator():
    A = topological_insulator(LatticeSpec(8, 8, 8, V=2.0, seed=1))
    a, b = lanczos_bounds(A, 30, seed=0)
    assert -5.6 <= a and b <= 5.6
    w = np.linalg.eigvalsh(A.to_dense())
    assert a <= w[0] and w[-1] <= b


def test_kpm_flat_density():
    # pointwise stochastic noise ~ (R * states per kernel width)^(-1/2): at
    # R = 32 a 5% bound needs a few hundred thousand states
    D = 2**18
    dos = kpm_dos(diag_flat(D), (-1, 1), M=2000, R=32, seed=11)
    lam = np.linspace(-0.9, 0.9, 2001)
    assert np.max(np.abs(dos(lam) / (D / 2) - 1)) < 0.05


def test_kpm_integral_and_count(flat_dos):
    assert flat_dos.total() == pytest.approx(40000, rel=5e-3)
    assert estimate_count(flat_dos, -1, 1) == pytest.approx(40000, rel=5e-3)
    assert estimate_count(flat_dos, -1, 0) == pytest.approx(20000, rel=0.02)
    assert abs(estimate_count(flat_dos, -2.5e-3, 2.5e-3) - 100) <= 10


def test_kpm_reconstruction_nonnegative(flat_dos):
    lam, rho = flat_dos.grid()
    assert lam.size == 4 * flat_dos.moments.size
    assert rho.min() >= -1e-10 * 40000 / 2


def test_closed_form_count_matches_quadrature():
    dos = kpm_dos(diag_linear(4000), (-1.01, 1.01), M=150, R=8, seed=4)
    for lo, hi in [(-0.3, 0.2), (0.1, 0.9), (-1.0, -0.5)]:
        ref, _ = quad(dos, lo, hi, epsabs=1e-8 * 4000, limit=500)
        assert dos.count(lo, hi) == pytest.approx(ref, abs=1e-6 * 4000)


@settings(max_examples=30, deadline=None)
@given(st.floats(-0.99, 0.99), st.floats(-0.99, 0.99), st.floats(-0.99, 0.99))
def test_count_is_additive(x, y, z):
    lo, mid, hi = sorted((x, y, z))
    dos = DosEstimate(np.exp(-0.01 * np.arange(200)), (-1, 1))
    assert dos.count(lo, hi) == pytest.approx(dos.count(lo, mid) + dos.count(mid, hi),
                                              abs=1e-10)


def test_kpm_is_reproducible():
    A = diag_flat(500)
    d1 = kpm_dos(A, (-1, 1), 100, 4, seed=9)
    d2 = kpm_dos(A, (-1, 1), 100, 4, seed=9)
    assert np.array_equal(d1.moments, d2.moments)


def test_kpm_detects_bad_bounds():
    with pytest.raises(ValueError, match="not inside"):
        kpm_dos(diag_flat(500), (-0.5, 0.5), 200, 2, seed=0)
    with pytest.raises(ValueError):
        kpm_dos(diag_flat(10), (-1, 1), 1, 1)


def test_linear_density():
    D = 2**18
    dos = kpm_dos(diag_linear(D), (-1, 1), 2000, 32, seed=3)
    lam = np.linspace(0.3, 0.9, 200)
    np.testing.assert_allclose(dos(lam), D * lam, rtol=0.05)
    np.testing.assert_allclose(dos(-lam), D * lam, rtol=0.05)


def test_analytic_densities():
    flat = AnalyticDos.flat(40000)
    assert flat.count(-2.5e-3, 2.5e-3) == pytest.approx(100)
    assert flat.total() == pytest.approx(40000)
    lin = AnalyticDos.linear(40000)
    assert lin.count(-0.05, 0.05) == pytest.approx(100)
    assert lin.count(-3, 3) == pytest.approx(40000)
    assert lin(0.5) == pytest.approx(20000)


def test_weight_density_of_eigenvector():
    lam = np.linspace(-0.9, 0.9, 101)
    A = SparseMatrix.diagonal(lam)
    X = np.zeros((101, 1))
    X[60, 0] = 1.0
    p = FilterPolynomial.build((-0.1, 0.1), (-1, 1), 400)
    _, mom = apply_filter(A, X, p, want_moments=True)
    w = weight_density(mom, (-1, 1))
    assert w.total() == pytest.approx(1.0)
    x = np.linspace(-1, 1, 4001)
    assert x[np.argmax(w(x))] == pytest.approx(lam[60], abs=0.01)


def test_weight_density_counts_search_vectors(rng):
    A = diag_flat(3000)
    X = random_block(3000, 20, rng)
    p = FilterPolynomial.build((-0.1, 0.1), (-1, 1), 50)
    _, mom = apply_filter(A, X, p, want_moments=True)
    w = weight_density(mom, (-1, 1))
    assert w.total() == pytest.approx(20, rel=0.01)
    assert w.num_vectors == 20
    w2 = weight_density([mom[:, k] for k in range(20)], (-1, 1))
    np.testing.assert_allclose(w2.moments, w.moments)
    with pytest.raises(ValueError):
        weight_density([mom[:, 0], mom[:-1, 1]], (-1, 1))


def _slab_eigenvalues(Lx, Ly, Lz, t=1.0):
    """Exact spectrum of the clean slab from its (k_x, k_y) Bloch blocks."""
    G = gamma_matrices()
    hop = [-t * (G[1] - 1j * G[j + 2]) / 2 for j in range(3)]
    Hz = np.zeros((4 * Lz, 4 * Lz), complex)
    for z in range(Lz):
        Hz[4 * z:4 * z + 4, 4 * z:4 * z + 4] = 2 * G[1]
        if z + 1 < Lz:
            Hz[4 * z + 4:4 * z + 8, 4 * z:4 * z + 4] = hop[2]
            Hz[4 * z:4 * z + 4, 4 * z + 4:4 * z + 8] = hop[2].conj().T
    eye = np.eye(Lz)
    out = []
    for kx in 2 * np.pi * np.arange(Lx) / Lx:
        for ky in 2 * np.pi * np.arange(Ly) / Ly:
            B = sum(h * np.exp(-1j * k) + h.conj().T * np.exp(1j * k)
                    for h, k in ((hop[0], kx), (hop[1], ky)))
            out.append(np.linalg.eigvalsh(Hz + np.kron(eye, B)))
    return np.sort(np.concatenate(out))


def test_slab_oracle_matches_dense():
    w = np.linalg.eigvalsh(topological_insulator(LatticeSpec(4, 4, 3)).to_dense())
    np.testing.assert_allclose(_slab_eigenvalues(4, 4, 3), w, atol=1e-12)


@pytest.mark.slow
def test_insulator_count_at_2_17():
    # D = 4 * 64 * 64 * 8 = 2^17, clean slab so the exact count is available
    A = topological_insulator(LatticeSpec(64, 64, 8))
    assert A.dim == 2**17
    exact = _slab_eigenvalues(64, 64, 8)
    dos = kpm_dos(A, (-5.5, 5.5), 2000, 32, seed=5)
    n_true = np.count_nonzero(np.abs(exact) <= 0.06)
    assert abs(dos.count(-0.06, 0.06) - n_true) <= 1e-4 * A.dim
    assert dos.total() == pytest.approx(A.dim, rel=5e-3)

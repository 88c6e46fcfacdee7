"""Spectral probes: Lanczos bounds, KPM densities and eigenvalue counts."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import eigh_tridiagonal

from .filters import JACKSON, kernel_coeffs, scaling, window_coeffs
from .linalg import SparseMatrix, column_dots, random_block, spmmvm, spmmvm_fused


def lanczos_bounds(A: SparseMatrix, iters: int = 30, seed=None, margin: float = 0.01,
                   max_restarts: int = 3) -> tuple[float, float]:
    """Interval [a, b] enclosing the spectrum, from extreme Lanczos Ritz values.

    Runs ``iters`` steps with full reorthogonalisation and widens each end by
    ``margin * (ritz_max - ritz_min)``. On breakdown the iteration continues
    with a fresh random vector orthogonal to the basis (at most
    ``max_restarts`` times).
    """
    if iters < 2:
        raise ValueError("need at least two Lanczos iterations")
    rng = np.random.default_rng(seed)
    iters = min(iters, A.dim)
    Q = np.zeros((A.dim, iters + 1), dtype=A.dtype)
    alphas, betas = np.zeros(iters), np.zeros(iters)
    q = random_block(A.dim, 1, rng, A.kind)[:, 0]
    Q[:, 0] = q
    restarts = 0
    scale = 0.0
    for j in range(iters):
        w = spmmvm(A, np.ascontiguousarray(Q[:, j:j + 1]))[:, 0]
        alphas[j] = np.vdot(Q[:, j], w).real
        scale = max(scale, np.linalg.norm(w))
        for _ in range(2):
            w -= Q[:, :j + 1] @ (Q[:, :j + 1].conj().T @ w)
        beta = np.linalg.norm(w)
        if j == iters - 1:
            break
        if beta <= 1e-12 * max(scale, 1e-300):
            if restarts >= max_restarts:
                iters = j + 1
                break
            restarts += 1
            w = random_block(A.dim, 1, rng, A.kind)[:, 0]
            for _ in range(2):
                w -= Q[:, :j + 1] @ (Q[:, :j + 1].conj().T @ w)
            nrm = np.linalg.norm(w)
            if nrm == 0:
                iters = j + 1
                break
            Q[:, j + 1] = w / nrm
            betas[j] = 0.0
            continue
        betas[j] = beta
        Q[:, j + 1] = w / beta
    ritz = eigh_tridiagonal(alphas[:iters], betas[:iters - 1], eigvals_only=True)
    lo, hi = float(ritz[0]), float(ritz[-1])
    pad = margin * (hi - lo)
    if pad == 0.0:
        pad = margin * max(abs(lo), 1.0)
    return lo - pad, hi + pad


@dataclass
class ChebyshevDensity:
    """Density on [a, b] represented by (undamped) Chebyshev moments.

    ``moments[n]`` is the trace-like sum ``sum_k <x_k, T_n(alpha A + beta) x_k>``;
    the Jackson kernel is applied on reconstruction.
    """

    moments: np.ndarray
    bounds: tuple[float, float]

    def __post_init__(self):
        self.moments = np.asarray(self.moments, dtype=float)
        self.bounds = (float(self.bounds[0]), float(self.bounds[1]))
        if self.moments.ndim != 1 or self.moments.size < 2:
            raise ValueError("need at least two moments")

    @property
    def damped(self) -> np.ndarray:
        return kernel_coeffs(JACKSON, self.moments.size - 1) * self.moments

    def __call__(self, lam):
        """Reconstructed density at eigenvalue(s) ``lam`` (per unit of lambda)."""
        alpha, beta = scaling(self.bounds)
        x = alpha * np.asarray(lam, dtype=float) + beta
        inside = np.abs(x) < 1
        theta = np.arccos(np.clip(x, -1.0, 1.0))
        mu = self.damped
        n = np.arange(1, mu.size)
        series = mu[0] + 2.0 * np.cos(np.multiply.outer(theta, n)) @ mu[1:]
        with np.errstate(divide="ignore", invalid="ignore"):
            rho = np.where(inside, alpha * series / (np.pi * np.sqrt(1.0 - x * x)), 0.0)
        return rho if rho.ndim else float(rho)

    def count(self, lo, hi) -> float:
        """Integral of the reconstruction over [lo, hi], in closed form.

        Integrating the damped series term by term yields the window expansion
        coefficients of [lo, hi], so the count is ``sum_n g_n mu_n c_n``.
        """
        a, b = self.bounds
        lo, hi = max(float(lo), a), min(float(hi), b)
        if hi <= lo:
            return 0.0
        c = window_coeffs((lo, hi), self.bounds, self.moments.size - 1)
        return float(np.dot(c, self.damped))

    def total(self) -> float:
        return float(self.damped[0])

    def grid(self, points: int | None = None):
        """(lambda, rho) on Chebyshev nodes; 4 nodes per moment by default."""
        points = points or 4 * self.moments.size
        theta = np.pi * (np.arange(points)[::-1] + 0.5) / points
        alpha, beta = scaling(self.bounds)
        lam = (np.cos(theta) - beta) / alpha
        return lam, self(lam)


@dataclass
class DosEstimate(ChebyshevDensity):
    num_samples: int = 0
    matrix_dim: int = 0


@dataclass
class WeightDensity(ChebyshevDensity):
    num_vectors: int = 0


class AnalyticDos:
    """Exact DOS given by a cumulative count function; same interface as DosEstimate."""

    def __init__(self, cdf, bounds, matrix_dim, density=None):
        self._cdf = cdf
        self._density = density
        self.bounds = (float(bounds[0]), float(bounds[1]))
        self.matrix_dim = matrix_dim

    def count(self, lo, hi) -> float:
        a, b = self.bounds
        lo, hi = max(float(lo), a), min(float(hi), b)
        return 0.0 if hi <= lo else float(self._cdf(hi) - self._cdf(lo))

    def total(self) -> float:
        return self.count(*self.bounds)

    def __call__(self, lam):
        if self._density is None:
            raise NotImplementedError("no closed-form density supplied")
        return self._density(np.asarray(lam, dtype=float))

    @classmethod
    def flat(cls, dim, bounds=(-1.0, 1.0)) -> "AnalyticDos":
        a, b = map(float, bounds)
        rho0 = dim / (b - a)
        return cls(lambda x: rho0 * (x - a), bounds, dim,
                   lambda x: np.where((x >= a) & (x <= b), rho0, 0.0))

    @classmethod
    def linear(cls, dim) -> "AnalyticDos":
        """rho(lambda) = D |lambda| on [-1, 1]."""
        return cls(lambda x: 0.5 * dim * (1.0 + np.sign(x) * x * x), (-1.0, 1.0), dim,
                   lambda x: np.where(np.abs(x) <= 1, dim * np.abs(x), 0.0))


def kpm_dos(A: SparseMatrix, bounds, M: int = 2000, R: int = 32, seed=None) -> DosEstimate:
    """Stochastic-trace KPM estimate of the density of states.

    ``mu_n = (D / R) sum_r <z_r, T_n(alpha A + beta) z_r>`` over R unit
    Gaussian vectors; the Jackson kernel is applied on reconstruction.
    """
    if M < 2 or R < 1:
        raise ValueError("need M >= 2 and R >= 1")
    rng = np.random.default_rng(seed)
    alpha, beta = scaling(bounds)
    Z = random_block(A.dim, R, rng, A.kind)
    mu = np.empty((M + 1, R))
    mu[0] = column_dots(Z, Z).real
    U = spmmvm(A, Z, alpha, beta)
    mu[1] = column_dots(Z, U).real
    W = Z.copy()
    X = np.zeros_like(Z)
    for n in range(2, M + 1):
        _, _, d = spmmvm_fused(A, U, W, X, alpha, beta, 0.0, want_dots=True, dot_ref=Z)
        mu[n] = d.real
        if np.any(np.abs(mu[n]) > 1.01 * mu[0]):
            raise ValueError(
                f"|T_{n}| exceeds 1 on the probe vectors: the spectrum is not inside "
                f"[{bounds[0]}, {bounds[1]}]")
        W, U = U, W
    moments = A.dim / R * mu.sum(axis=1)
    return DosEstimate(moments, tuple(bounds), num_samples=R, matrix_dim=A.dim)


def estimate_count(dos, lo, hi) -> float:
    """Estimated number of eigenvalues in [lo, hi]."""
    return dos.count(lo, hi)


def weight_density(moment_sets, bounds) -> WeightDensity:
    """Combine per-vector moment arrays ``<x_k, T_n x_k>`` into w(lambda).

    ``moment_sets`` is either an ``(N_p + 1, n_b)`` array, as returned by
    :func:`chebfd.filters.apply_filter`, or a sequence of 1-d arrays.
    """
    if isinstance(moment_sets, np.ndarray) and moment_sets.ndim == 2:
        arr = moment_sets
    else:
        sets = [np.asarray(m, dtype=float) for m in moment_sets]
        if len({m.shape for m in sets}) != 1:
            raise ValueError("inconsistent moment lengths")
        arr = np.column_stack(sets)
    return WeightDensity(arr.sum(axis=1), tuple(bounds), num_vectors=arr.shape[1])

"""Chebyshev window filters: coefficients, kernel damping and block application."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .linalg import SparseMatrix, _check_block, block_axpy_scal, column_dots, spmmvm, spmmvm_fused


@dataclass(frozen=True)
class KernelKind:
    """Damping kernel: ``none``, ``fejer``, ``jackson`` or ``lanczos`` (with ``mu``)."""

    name: str = "lanczos"
    mu: int = 2

    def __post_init__(self):
        if self.name not in ("none", "fejer", "jackson", "lanczos"):
            raise ValueError(f"unknown kernel {self.name!r}")
        if self.mu < 1:
            raise ValueError("Lanczos kernel needs mu >= 1")

    @classmethod
    def parse(cls, text: str) -> "KernelKind":
        """Parse ``"jackson"``, ``"none"``, ``"lanczos"`` or ``"lanczos:3"``."""
        name, _, mu = text.strip().lower().partition(":")
        return cls(name, int(mu) if mu else 2)

    def __str__(self):
        return f"lanczos:{self.mu}" if self.name == "lanczos" else self.name


NONE = KernelKind("none")
FEJER = KernelKind("fejer")
JACKSON = KernelKind("jackson")
LANCZOS = KernelKind("lanczos", 2)


def scaling(bounds) -> tuple[float, float]:
    """Affine map x -> alpha x + beta taking [a, b] onto [-1, 1]."""
    a, b = float(bounds[0]), float(bounds[1])
    if not a < b:
        raise ValueError(f"degenerate bounds [{a}, {b}]")
    return 2.0 / (b - a), (a + b) / (a - b)


def _mapped_angle(x, alpha, beta):
    return np.arccos(np.clip(alpha * np.asarray(x, dtype=float) + beta, -1.0, 1.0))


def window_coeffs(target, bounds, degree: int) -> np.ndarray:
    """Chebyshev coefficients c_0..c_degree of the rectangular window on ``target``.

    The sign is chosen so that c_0 > 0, i.e. the expansion approximates +1
    inside the target interval.
    """
    lo, hi = float(target[0]), float(target[1])
    a, b = float(bounds[0]), float(bounds[1])
    if not lo < hi:
        raise ValueError(f"degenerate target interval [{lo}, {hi}]")
    if lo < a or hi > b:
        raise ValueError(f"target [{lo}, {hi}] is not inside bounds [{a}, {b}]")
    if degree < 1:
        raise ValueError("degree must be >= 1")
    alpha, beta = scaling(bounds)
    t_lo, t_hi = _mapped_angle(lo, alpha, beta), _mapped_angle(hi, alpha, beta)
    n = np.arange(1, degree + 1)
    c = np.empty(degree + 1)
    c[0] = (t_lo - t_hi) / np.pi
    c[1:] = 2.0 / (np.pi * n) * (np.sin(n * t_lo) - np.sin(n * t_hi))
    return c


def kernel_coeffs(kind: KernelKind, degree: int) -> np.ndarray:
    """Damping factors g_0..g_degree for the given kernel."""
    if degree < 1:
        raise ValueError("degree must be >= 1")
    n = np.arange(degree + 1, dtype=float)
    if kind.name == "none":
        return np.ones(degree + 1)
    if kind.name == "fejer":
        return (degree - n + 1) / (degree + 1)
    if kind.name == "jackson":
        q = np.pi / degree
        return ((degree - n) * np.cos(q * n) + np.sin(q * n) / np.tan(q)) / degree
    # np.sinc(x) = sin(pi x)/(pi x) already has the n = 0 limit built in
    return np.sinc(n / (degree + 1)) ** kind.mu


@dataclass(frozen=True)
class FilterPolynomial:
    """Kernel-damped Chebyshev expansion p(x) = sum_n g_n c_n T_n(alpha x + beta)."""

    combined: np.ndarray
    bounds: tuple[float, float]
    target: tuple[float, float]
    kernel: KernelKind = LANCZOS
    alpha: float = field(init=False)
    beta: float = field(init=False)

    def __post_init__(self):
        combined = np.array(self.combined, dtype=float)
        combined.flags.writeable = False
        object.__setattr__(self, "combined", combined)
        object.__setattr__(self, "bounds", (float(self.bounds[0]), float(self.bounds[1])))
        object.__setattr__(self, "target", (float(self.target[0]), float(self.target[1])))
        alpha, beta = scaling(self.bounds)
        object.__setattr__(self, "alpha", alpha)
        object.__setattr__(self, "beta", beta)
        if combined.size < 2:
            raise ValueError("a filter needs at least two coefficients")
        if not self.target[0] < self.target[1]:
            raise ValueError("degenerate target interval")
        if self.target[0] < self.bounds[0] or self.target[1] > self.bounds[1]:
            raise ValueError("target interval must lie inside the bounds")

    @property
    def degree(self) -> int:
        return self.combined.size - 1

    @classmethod
    def build(cls, target, bounds, degree: int, kernel: KernelKind = LANCZOS) -> "FilterPolynomial":
        c = window_coeffs(target, bounds, degree)
        g = kernel_coeffs(kernel, degree)
        return cls(g * c, tuple(bounds), tuple(target), kernel)

    def table(self) -> np.ndarray:
        """Rows (n, c_n, g_n, g_n c_n) for plotting or dumping."""
        n = np.arange(self.degree + 1)
        c = window_coeffs(self.target, self.bounds, self.degree)
        g = kernel_coeffs(self.kernel, self.degree)
        return np.column_stack([n, c, g, self.combined])

    def write_table(self, path) -> None:
        np.savetxt(path, self.table(), fmt=["%d", "%.17g", "%.17g", "%.17g"],
                   header="n c_n g_n g_n*c_n")


def eval_scalar(p: FilterPolynomial, x):
    """Evaluate p at points of [a, b] with the three-term Chebyshev recurrence."""
    x = np.asarray(x, dtype=float)
    a, b = p.bounds
    # one ulp of slack so that x = a, b survive the round trip through scaling
    slack = 4 * np.finfo(float).eps * max(abs(a), abs(b))
    if np.any(x < a - slack) or np.any(x > b + slack):
        raise ValueError(f"evaluation point outside the expansion interval [{a}, {b}]")
    y = p.alpha * x + p.beta
    coef = p.combined
    t_prev = np.ones_like(y)
    t_cur = y
    acc = coef[0] * t_prev + coef[1] * t_cur
    for n in range(2, coef.size):
        t_prev, t_cur = t_cur, 2.0 * y * t_cur - t_prev
        acc = acc + coef[n] * t_cur
    return acc if acc.ndim else float(acc)


def apply_filter(A: SparseMatrix, X: np.ndarray, p: FilterPolynomial, want_moments: bool = False):
    """Replace the block ``X`` by ``p[A] X``.

    Follows the textbook recurrence layout: two explicit start-up steps that
    combine the first three terms, then ``N_p - 2`` fused steps that each do
    one spMMVM plus the block axpy. The workspace is three blocks (X, U, W)
    whose roles rotate by handle swap.

    Args:
        A: Matrix whose spectrum lies inside ``p.bounds``.
        X: Row-major block, overwritten with the filtered vectors.
        p: Filter polynomial of degree >= 2.
        want_moments: Also return ``mu[n, k] = <x_k, T_n(alpha A + beta) x_k>``
            for the input vectors, n = 0..N_p. This keeps one extra copy of
            the input block.

    Returns:
        ``(X, moments)``; ``moments`` is None unless requested.
    """
    _check_block(X, A.dim)
    if p.degree < 2:
        raise ValueError("apply_filter needs a polynomial of degree >= 2")
    coef = p.combined
    alpha, beta = p.alpha, p.beta
    moments = None
    x0 = None
    if want_moments:
        x0 = X.copy()
        moments = np.empty((p.degree + 1, X.shape[1]), dtype=X.dtype)
        moments[0] = column_dots(x0, x0)

    U = spmmvm(A, X, alpha, beta)
    W = X.copy()
    _, _, d2 = spmmvm_fused(A, U, W, X, alpha, beta, 0.0, want_dots=want_moments)
    if want_moments:
        moments[1] = column_dots(x0, U)
        moments[2] = d2
    block_axpy_scal(X, U, W, coef[0], coef[1], coef[2])

    for n in range(3, p.degree + 1):
        W, U = U, W
        _, _, d = spmmvm_fused(A, U, W, X, alpha, beta, coef[n],
                               want_dots=want_moments, dot_ref=x0)
        if want_moments:
            moments[n] = d
    if moments is not None:
        # <x, T_n(H) x> is real for Hermitian H
        moments = np.ascontiguousarray(moments.real)
    return X, moments

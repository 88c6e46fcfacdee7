"""Filtered subspace iteration for interior eigenpairs.

Each iteration filters the search block, orthonormalises it (SVQB), runs a
Rayleigh-Ritz step and checks the Ritz pairs inside the target interval.
"""
from __future__ import annotations

import csv
import json
import logging
import math
import time
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import eigh

from .design import DesignResult, IntervalConfig, choose_parameters, damping_factor, \
    quality, search_margin_for
from .filters import LANCZOS, FilterPolynomial, KernelKind, apply_filter
from .linalg import SparseMatrix, _check_block, gram, random_block, spmmvm
from .probe import WeightDensity, kpm_dos, lanczos_bounds, weight_density

log = logging.getLogger(__name__)


@dataclass
class SolverOptions:
    """Parameters of a solve.

    ``N_S = 0`` and ``N_p = 0`` mean "choose automatically" (``N_S = 2 ceil(N_T)``
    and the degree of best quality). ``bounds`` and ``dos`` skip the Lanczos
    and KPM probes when the spectral interval or the density is already known.
    """

    target: tuple[float, float]
    epsilon: float = 1e-12
    N_S: int = 0
    N_p: int = 0
    kernel: KernelKind = LANCZOS
    max_iters: int = 50
    seed: int | None = 0
    dos_moments: int = 2000
    dos_samples: int = 32
    deterministic: bool = True
    lanczos_iters: int = 30
    drop_tol: float = 1e-14
    bounds: tuple[float, float] | None = None
    dos: object = None

    def __post_init__(self):
        lo, hi = map(float, self.target)
        if not lo < hi:
            raise ValueError("target interval must have positive width")
        self.target = (lo, hi)
        if not self.epsilon > 0:
            raise ValueError("epsilon must be positive")
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")
        if self.N_S < 0 or self.N_p < 0:
            raise ValueError("N_S and N_p must be >= 0")
        if isinstance(self.kernel, str):
            self.kernel = KernelKind.parse(self.kernel)


@dataclass
class RitzSet:
    values: np.ndarray
    vectors: np.ndarray
    residual_norms: np.ndarray
    accepted: np.ndarray = None

    def __post_init__(self):
        if self.accepted is None:
            self.accepted = np.zeros(self.values.size, dtype=bool)


@dataclass
class ConvergenceReport:
    iterations: int
    total_spmvms: int
    values: np.ndarray
    vectors: np.ndarray
    residuals: np.ndarray
    converged: bool
    N_S: int
    N_p: int
    bounds: tuple[float, float]
    target: tuple[float, float]
    n_target_estimate: float
    count_guard: int
    norm_estimate: float
    history: list = field(default_factory=list)
    ritz: RitzSet | None = None
    weight_density: WeightDensity | None = None
    design: DesignResult | None = None
    wall_time: float = 0.0
    message: str = ""

    @property
    def num_found(self) -> int:
        return int(self.values.size)

    def to_dict(self) -> dict:
        return {
            "converged": self.converged,
            "message": self.message,
            "iterations": self.iterations,
            "total_spmvms": self.total_spmvms,
            "N_S": self.N_S,
            "N_p": self.N_p,
            "bounds": list(self.bounds),
            "target": list(self.target),
            "n_target_estimate": self.n_target_estimate,
            "count_guard": self.count_guard,
            "norm_estimate": self.norm_estimate,
            "num_found": self.num_found,
            "eigenvalues": self.values.tolist(),
            "residuals": self.residuals.tolist(),
            "design": None if self.design is None else self.design.to_dict(),
            "wall_time": self.wall_time,
            "history": self.history,
        }

    def write_json(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=2)

    def write_history(self, path) -> None:
        keys = ["iter", "min_residual", "max_residual", "accepted", "ghosts", "spmvms"]
        with open(path, "w", newline="") as fh:
            w = csv.DictWriter(fh, fieldnames=keys, extrasaction="ignore")
            w.writeheader()
            w.writerows(self.history)


def svqb_orthonormalize(Y: np.ndarray, drop_tol: float = 1e-14):
    """Orthonormal basis of span(Y) from the eigendecomposition of its Gram matrix.

    Columns are scaled to unit norm first; directions whose Gram eigenvalue is
    below ``drop_tol`` times the largest are dropped. A second pass is made
    when the kept spectrum is too ill-conditioned for one pass to reach
    orthogonality at round-off level.

    Returns:
        ``(Q, rank)`` with ``Q`` of width ``rank``.
    """
    _check_block(Y)
    if Y.shape[1] < 1:
        raise ValueError("empty block")
    Q, rank, cond = _svqb_pass(Y, drop_tol)
    if rank and cond * np.finfo(float).eps > 1e-14:
        Q, rank, _ = _svqb_pass(Q, drop_tol)
    return Q, rank


def _svqb_pass(Y, drop_tol):
    G = gram(Y)
    diag = G.diagonal().real
    if np.any(diag < 0) or not np.all(np.isfinite(diag)):
        raise ValueError("Gram matrix has a negative or non-finite diagonal")
    if diag.max() == 0:
        return np.zeros((Y.shape[0], 0), dtype=Y.dtype), 0, 1.0
    s = np.where(diag > 0, 1.0 / np.sqrt(np.where(diag > 0, diag, 1.0)), 0.0)
    Gs = s[:, None] * G * s[None, :]
    lam, V = eigh(Gs)
    if lam[0] < -1e-12 * np.trace(Gs).real:
        raise ValueError(f"Gram matrix is indefinite (eigenvalue {lam[0]:.3e})")
    keep = lam > drop_tol * lam[-1]
    lam, V = lam[keep], V[:, keep]
    T = (s[:, None] * V) / np.sqrt(lam)[None, :]
    Q = np.ascontiguousarray(Y @ T.astype(Y.dtype, copy=False))
    return Q, int(keep.sum()), float(lam[-1] / lam[0])


def _repair_rank(Q, width, rng, kind, drop_tol, max_tries=5):
    """Top Q up to ``width`` orthonormal columns with fresh random directions."""
    for _ in range(max_tries):
        missing = width - Q.shape[1]
        if missing <= 0:
            return Q
        R = random_block(Q.shape[0], missing, rng, kind)
        for _ in range(2):
            R -= Q @ (Q.conj().T @ R)
        R, r = svqb_orthonormalize(np.ascontiguousarray(R), drop_tol)
        Q = np.ascontiguousarray(np.hstack([Q, R]))
    if Q.shape[1] < width:
        raise RuntimeError("could not restore the search-space dimension")
    return Q


def rayleigh_ritz(A: SparseMatrix, Q: np.ndarray) -> RitzSet:
    """Ritz pairs of ``A`` on span(Q), with residual norms ``||A v - theta v||``."""
    AQ = spmmvm(A, Q)
    H = gram(Q, AQ)
    H = 0.5 * (H + H.conj().T)
    theta, Y = eigh(H)
    Y = Y.astype(Q.dtype, copy=False)
    V = np.ascontiguousarray(Q @ Y)
    R = AQ @ Y - V * theta[None, :]
    res = np.linalg.norm(R, axis=0)
    return RitzSet(theta, V, res)


def count_guard(n_t: float) -> int:
    """Fewest accepted pairs consistent with a stochastic count estimate n_t."""
    return max(1, math.ceil(n_t - 3.0 * math.sqrt(n_t)))


def solve(A: SparseMatrix, opts: SolverOptions, start: np.ndarray | None = None,
          callback=None) -> ConvergenceReport:
    """Find all eigenpairs of ``A`` in ``opts.target`` to residual ``opts.epsilon``.

    Args:
        A: Hermitian matrix.
        opts: Solver options.
        start: Optional start block of width N_S (copied); random otherwise.
        callback: Called as ``callback(iteration, ritz_set)`` after each
            Rayleigh-Ritz step.
    """
    t0 = time.perf_counter()
    rng = np.random.default_rng(opts.seed)
    lo, hi = opts.target

    bounds = opts.bounds
    if bounds is None:
        bounds = lanczos_bounds(A, opts.lanczos_iters, seed=rng.integers(2**63))
    bounds = (float(bounds[0]), float(bounds[1]))
    if not (bounds[0] < lo and hi < bounds[1]):
        raise ValueError(f"target [{lo}, {hi}] is not strictly inside the bounds {bounds}")
    dos = opts.dos
    if dos is None:
        dos = kpm_dos(A, bounds, opts.dos_moments, opts.dos_samples,
                      seed=rng.integers(2**63))
    n_t = float(dos.count(lo, hi))
    norm_est = max(abs(bounds[0]), abs(bounds[1]))

    def report(**kw):
        base = dict(iterations=0, total_spmvms=0, values=np.zeros(0),
                    vectors=np.zeros((A.dim, 0), dtype=A.dtype), residuals=np.zeros(0),
                    converged=False, N_S=0, N_p=0, bounds=bounds, target=(lo, hi),
                    n_target_estimate=n_t, count_guard=0, norm_estimate=norm_est)
        base.update(kw)
        base["wall_time"] = time.perf_counter() - t0
        return ConvergenceReport(**base)

    if n_t < 0.5:
        return report(converged=True, message="target interval is empty")

    N_S = opts.N_S or 2 * math.ceil(n_t)
    N_S = min(N_S, A.dim)
    design = None
    if opts.N_p:
        N_p = opts.N_p
        try:
            margin = search_margin_for(dos, (lo, hi), N_S, bounds=bounds)
            cfg = IntervalConfig((lo, hi), margin, bounds)
            p = FilterPolynomial.build((lo, hi), bounds, N_p, opts.kernel)
            sigma = damping_factor(p, cfg)
            iters = math.ceil(math.log10(opts.epsilon) / math.log10(sigma))
            eta = quality(N_p, sigma)
            design = DesignResult(N_p, eta, sigma, eta * N_S * -math.log10(opts.epsilon),
                                  iters, opts.kernel)
        except ValueError as err:
            log.info("no prediction for the fixed degree: %s", err)
    else:
        _, design, _ = choose_parameters(dos, (lo, hi), N_S, opts.kernel, opts.epsilon, bounds)
        N_p = design.N_p_opt
    p = FilterPolynomial.build((lo, hi), bounds, N_p, opts.kernel)
    guard = count_guard(n_t)
    log.info("N_T ~ %.1f, N_S = %d, N_p = %d, bounds = [%.6g, %.6g]", n_t, N_S, N_p, *bounds)

    if start is None:
        X = random_block(A.dim, N_S, rng, A.kind)
    else:
        _check_block(start, A.dim, "start")
        if start.shape[1] != N_S or start.dtype != A.dtype:
            raise ValueError(f"start block must be {A.dim} x {N_S} of type {A.dtype}")
        X = start.copy()

    tol_ghost = math.sqrt(opts.epsilon)
    history = []
    spmvms = 0
    ritz = None
    w = None
    for it in range(1, opts.max_iters + 1):
        X, moments = apply_filter(A, X, p, want_moments=True)
        spmvms += N_S * N_p
        w = weight_density(moments, bounds)
        Q, rank = svqb_orthonormalize(X, opts.drop_tol)
        if rank < N_S:
            log.info("iteration %d: rank %d < %d, adding random directions", it, rank, N_S)
            Q = _repair_rank(Q, N_S, rng, A.kind, opts.drop_tol)
        ritz = rayleigh_ritz(A, Q)
        inside = (ritz.values >= lo) & (ritz.values <= hi)
        ghost = inside & (ritz.residual_norms > tol_ghost)
        ritz.accepted = inside & (ritz.residual_norms <= opts.epsilon)
        n_acc = int(ritz.accepted.sum())
        res_in = ritz.residual_norms[inside]
        history.append({
            "iter": it,
            "min_residual": float(res_in.min()) if res_in.size else float("nan"),
            "max_residual": float(res_in.max()) if res_in.size else float("nan"),
            "max_accepted_residual": float(ritz.residual_norms[ritz.accepted].max())
            if n_acc else float("nan"),
            "accepted": n_acc,
            "ghosts": int(ghost.sum()),
            "spmvms": spmvms,
        })
        log.info("iteration %d: %d accepted, %d ghosts", it, n_acc, int(ghost.sum()))
        if callback is not None:
            callback(it, ritz)
        pending = inside & ~ghost & ~ritz.accepted
        if not pending.any() and n_acc >= guard:
            acc = ritz.accepted
            return report(iterations=it, total_spmvms=spmvms, values=ritz.values[acc],
                          vectors=np.ascontiguousarray(ritz.vectors[:, acc]),
                          residuals=ritz.residual_norms[acc], converged=True, N_S=N_S,
                          N_p=N_p, count_guard=guard, history=history, ritz=ritz,
                          weight_density=w, design=design, message="converged")
        X = ritz.vectors
    acc = ritz.accepted
    return report(iterations=opts.max_iters, total_spmvms=spmvms, values=ritz.values[acc],
                  vectors=np.ascontiguousarray(ritz.vectors[:, acc]),
                  residuals=ritz.residual_norms[acc], converged=False, N_S=N_S, N_p=N_p,
                  count_guard=guard, history=history, ritz=ritz, weight_density=w,
                  design=design, message="max_iters reached before convergence")

"""Filter quality analysis and parameter selection.

The damping factor of a filter is the ratio between its largest magnitude
outside the search interval and its smallest magnitude on the target
interval; the quality ``eta = -N_p / log10(sigma)`` counts spMVMs per vector
per decade of damping. Everything here works on scalar polynomials only.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.fft import dct
from scipy.optimize import minimize_scalar

from .filters import LANCZOS, FilterPolynomial, KernelKind

# (c / S_w, N0, eta0) for the Lanczos mu=2 kernel at delta/S_w = 1e-3
LANCZOS_SCALING_TABLE = np.array([
    [0.0, 6.23, 2.58], [0.1, 6.20, 2.57], [0.2, 6.10, 2.53], [0.3, 5.94, 2.46],
    [0.4, 5.71, 2.37], [0.5, 5.40, 2.24], [0.6, 4.99, 2.07], [0.7, 4.46, 1.85],
    [0.8, 3.75, 1.55], [0.9, 2.73, 1.13],
])
# rough N0 seeds for the degree search; the grid widens if they are off
_N0_SEED = {"none": 1.4, "jackson": 7.9, "fejer": 30.0}

GRID_RATIO = 1.1
FINE_STEP = 0.0025


@dataclass(frozen=True)
class IntervalConfig:
    """Target interval, symmetric search margin and spectral bounds."""

    target: tuple[float, float]
    search_margin: float
    bounds: tuple[float, float] = (-1.0, 1.0)

    def __post_init__(self):
        lo, hi = map(float, self.target)
        a, b = map(float, self.bounds)
        object.__setattr__(self, "target", (lo, hi))
        object.__setattr__(self, "bounds", (a, b))
        if not lo < hi:
            raise ValueError("target interval must have positive width")
        if not self.search_margin > 0:
            raise ValueError("search margin must be positive")
        if not (a < lo - self.search_margin and hi + self.search_margin < b):
            raise ValueError(
                f"search interval [{lo - self.search_margin}, {hi + self.search_margin}]"
                f" is not inside [{a}, {b}]")

    @property
    def delta(self) -> float:
        return 0.5 * (self.target[1] - self.target[0])

    @property
    def center(self) -> float:
        return 0.5 * (self.target[0] + self.target[1])

    @property
    def half_width(self) -> float:
        return 0.5 * (self.bounds[1] - self.bounds[0])

    @property
    def search(self) -> tuple[float, float]:
        return self.target[0] - self.search_margin, self.target[1] + self.search_margin

    @classmethod
    def centered(cls, center, delta, margin, bounds=(-1.0, 1.0)) -> "IntervalConfig":
        return cls((center - delta, center + delta), margin, bounds)


@dataclass
class DesignResult:
    N_p_opt: int
    eta_opt: float
    sigma: float
    predicted_mvms: float
    predicted_iters: int
    kernel: KernelKind = LANCZOS
    curve: list = field(default_factory=list, repr=False)

    def to_dict(self) -> dict:
        return {"N_p_opt": self.N_p_opt, "eta_opt": self.eta_opt, "sigma": self.sigma,
                "predicted_mvms": self.predicted_mvms,
                "predicted_iters": self.predicted_iters, "kernel": str(self.kernel)}


def _values_on_angle_grid(coef, m):
    """p(cos theta_j) for theta_j = pi (j + 1/2) / m, via one DCT-III."""
    padded = np.zeros(m)
    padded[:coef.size] = coef
    # scipy's unnormalised DCT-III returns x_0 + 2 sum_{n>=1} x_n cos(...)
    return 0.5 * (dct(padded, type=3) + padded[0])


def _angle_eval(coef, theta):
    return float(np.dot(coef, np.cos(np.arange(coef.size) * theta)))


def _refine(f, theta, j, lo, hi, sign):
    """Polish a grid extremum of |p| between the neighbouring grid angles."""
    left = max(lo, theta[max(j - 1, 0)])
    right = min(hi, theta[min(j + 1, theta.size - 1)])
    if not left < right:
        return None
    res = minimize_scalar(lambda t: -sign * f(t), bounds=(left, right), method="bounded",
                          options={"xatol": 1e-15})
    return f(res.x)


def _extremum(f, theta, vals, lo, hi, sign):
    """sign=+1: max of |p| over theta in [lo, hi]; sign=-1: min."""
    cands = [f(lo), f(hi)]
    idx = np.nonzero((theta >= lo) & (theta <= hi))[0]
    if idx.size:
        j = idx[np.argmax(sign * vals[idx])]
        cands.append(vals[j])
        polished = _refine(f, theta, j, lo, hi, sign)
        if polished is not None:
            cands.append(polished)
    return max(cands) if sign > 0 else min(cands)


def damping_factor(p: FilterPolynomial, cfg: IntervalConfig, oversample: int = 10) -> float:
    """sigma = max_{[a,b] minus I_S} |p| / min_{I_T} |p|.

    The extrema are located on ``oversample * (N_p + 1)`` Chebyshev-spaced
    points, evaluated in one DCT, and each is polished by a bounded scalar
    search between neighbouring grid points.
    """
    coef = np.asarray(p.combined, dtype=float)
    m = max(oversample * (coef.size), 1024)
    theta = np.pi * (np.arange(m) + 0.5) / m
    vals = np.abs(_values_on_angle_grid(coef, m))

    def ang(x):
        return float(np.arccos(np.clip(p.alpha * x + p.beta, -1.0, 1.0)))

    def f(t):
        return abs(_angle_eval(coef, t))

    lo, hi = cfg.target
    s_lo, s_hi = cfg.search
    # theta decreases as x increases
    inner = _extremum(f, theta, vals, ang(hi), ang(lo), -1)
    if inner < 1e-300:
        raise ValueError("filter vanishes on the target interval")
    outer = 0.0
    if s_hi < p.bounds[1]:
        outer = max(outer, _extremum(f, theta, vals, 0.0, ang(s_hi), +1))
    if s_lo > p.bounds[0]:
        outer = max(outer, _extremum(f, theta, vals, ang(s_lo), np.pi, +1))
    return outer / inner


def quality(N_p: int, sigma: float) -> float:
    """eta = -N_p / log10(sigma): spMVMs per vector per decade of damping."""
    if not 0 < sigma < 1:
        raise ValueError(f"sigma = {sigma} does not damp (need 0 < sigma < 1)")
    return -N_p / math.log10(sigma)


def _eta_at(cfg, kind, n, cache):
    if n not in cache:
        if n < 2:
            cache[n] = (np.inf, np.inf)
        else:
            p = FilterPolynomial.build(cfg.target, cfg.bounds, n, kind)
            sigma = damping_factor(p, cfg)
            cache[n] = (sigma, quality(n, sigma) if 0 < sigma < 1 else np.inf)
    return cache[n][1]


def seed_degree(cfg: IntervalConfig, kind: KernelKind) -> float:
    """Scaling-law guess N0 (S_w / delta) (delta / delta') for the optimal degree."""
    if kind.name == "lanczos":
        frac = min(abs(cfg.center - sum(cfg.bounds) / 2) / cfg.half_width, 0.9)
        n0 = float(np.interp(frac, LANCZOS_SCALING_TABLE[:, 0], LANCZOS_SCALING_TABLE[:, 1]))
    else:
        n0 = _N0_SEED[kind.name]
    return n0 * cfg.half_width / cfg.search_margin


def optimize_degree(cfg: IntervalConfig, kind: KernelKind = LANCZOS, epsilon: float = 1e-12,
                    n_search: int = 1, max_degree: int = 2_000_000) -> DesignResult:
    """Degree N_p minimising eta for the interval configuration.

    A geometric grid (ratio 1.1) around the scaling-law seed is widened until
    the minimum is interior, then a 0.25% grid within one coarse step on each
    side and finally every integer within one fine step pin the optimum.
    """
    cache: dict[int, tuple[float, float]] = {}
    seed = max(seed_degree(cfg, kind), 4.0)
    lo_k, hi_k = -15, 15

    def coarse(k):
        return max(2, int(round(seed * GRID_RATIO ** k)))

    while True:
        ks = range(lo_k, hi_k + 1)
        etas = [_eta_at(cfg, kind, coarse(k), cache) for k in ks]
        best = int(np.argmin(etas))
        if not np.isfinite(etas[best]):
            if coarse(hi_k) >= max_degree:
                raise ValueError("no degree in the search range damps the search complement")
            hi_k += 10
            continue
        if best == len(etas) - 1 and coarse(hi_k) < max_degree:
            hi_k += 10
        elif best == 0 and coarse(lo_k) > 2:
            lo_k -= 10
        else:
            break
    n_best = coarse(lo_k + best)

    step = max(1, int(round(n_best * FINE_STEP)))
    lo_n = max(2, int(n_best / GRID_RATIO))
    hi_n = int(math.ceil(n_best * GRID_RATIO))
    fine = range(lo_n, hi_n + 1, step)
    n_best = min(fine, key=lambda n: (_eta_at(cfg, kind, n, cache), n))
    for n in range(max(2, n_best - step), n_best + step + 1):
        _eta_at(cfg, kind, n, cache)
    n_opt = min((n for n in cache if np.isfinite(cache[n][1])), key=lambda n: (cache[n][1], n))
    sigma, eta = cache[n_opt]
    iters = int(math.ceil(math.log10(epsilon) / math.log10(sigma) - 1e-9))
    curve = sorted((n, s, e) for n, (s, e) in cache.items())
    return DesignResult(n_opt, eta, sigma, eta * n_search * -math.log10(epsilon), iters,
                        kind, curve)


def fit_scaling_constants(kind: KernelKind = LANCZOS, center_fraction: float = 0.0,
                          delta_rel: float = 1e-3, margin_ratios=(0.5, 1.0, 2.0)):
    """Fit eta_opt = eta0 S_w/delta' and N_opt = N0 S_w/delta' over several margins.

    Returns:
        ``(eta0, N0)``. Warns if any point deviates from the fit by more than
        10%.
    """
    if not abs(center_fraction) < 1:
        raise ValueError("center must lie strictly inside the spectrum")
    s_w = 1.0
    delta = delta_rel * s_w
    scaled_eta, scaled_n = [], []
    for r in margin_ratios:
        cfg = IntervalConfig.centered(center_fraction * s_w, delta, r * delta, (-s_w, s_w))
        res = optimize_degree(cfg, kind)
        scaled_eta.append(np.log(res.eta_opt * r * delta / s_w))
        scaled_n.append(np.log(res.N_p_opt * r * delta / s_w))
    # least squares in log space with unit slope reduces to a mean
    eta0 = float(np.exp(np.mean(scaled_eta)))
    n0 = float(np.exp(np.mean(scaled_n)))
    resid = max(np.max(np.abs(np.asarray(scaled_eta) - np.log(eta0))),
                np.max(np.abs(np.asarray(scaled_n) - np.log(n0))))
    if resid > np.log(1.1):
        warnings.warn(f"scaling fit residual {np.expm1(resid):.1%} exceeds 10%", stacklevel=2)
    return eta0, n0


def predict_effort(dos_shape: str, N_T: int, N_S: int, S_w_over_delta: float, eta0: float,
                   epsilon: float = 1e-12):
    """Effort estimate eta*N_S and total spMVMs for a flat or linear DOS."""
    if not N_S > N_T >= 1:
        raise ValueError("need N_S > N_T >= 1 (the estimate has a pole at N_S = N_T)")
    if not 0 < epsilon < 1:
        raise ValueError("epsilon must lie in (0, 1)")
    base = eta0 * S_w_over_delta * N_T
    if dos_shape == "flat":
        eta_ns = base / (1.0 - N_T / N_S)
    elif dos_shape == "linear":
        ratio = math.sqrt(N_S / N_T)
        eta_ns = base * ratio / (1.0 - 1.0 / ratio)
    else:
        raise ValueError(f"unknown DOS shape {dos_shape!r}")
    return eta_ns, eta_ns * -math.log10(epsilon)


def search_margin_for(dos, target, N_S: float, rtol: float = 1e-6, bounds=None) -> float:
    """Margin delta' with count(target extended by delta') = N_S, by bisection.

    The margin is limited by ``bounds`` (default: the density's own bounds).
    """
    lo, hi = map(float, target)
    a, b = dos.bounds if bounds is None else bounds
    upper = min(lo - a, b - hi)
    if upper <= 0:
        raise ValueError("target touches the spectral bounds; no room for a search margin")

    def excess(d):
        return dos.count(lo - d, hi + d) - N_S

    left, right = 0.0, upper * (1 - 1e-12)
    if excess(right) < 0:
        raise ValueError(f"N_S = {N_S} exceeds the states available around the target")
    for _ in range(200):
        mid = 0.5 * (left + right)
        e = excess(mid)
        if abs(e) <= rtol * N_S:
            return mid
        if e < 0:
            left = mid
        else:
            right = mid
        if right - left <= 1e-15 * max(1.0, upper):
            break
    return 0.5 * (left + right)


def choose_parameters(dos, target, N_S: int, kind: KernelKind = LANCZOS,
                      epsilon: float = 1e-12, bounds=None):
    """Search margin and filter degree for ``N_S`` search vectors.

    ``dos`` is anything with ``bounds`` and ``count(lo, hi)``: a KPM estimate
    or an analytic density. ``bounds`` is the expansion interval of the
    filter and defaults to ``dos.bounds``.

    Returns:
        ``(IntervalConfig, DesignResult, N_T_estimate)``.
    """
    n_t = float(dos.count(*target))
    if n_t < 0.5:
        raise ValueError("target interval is empty according to the DOS estimate")
    if N_S <= n_t:
        raise ValueError(f"N_S = {N_S} must exceed the target count {n_t:.1f}")
    if N_S < math.ceil(1.25 * n_t):
        warnings.warn(f"N_S/N_T = {N_S / n_t:.2f} is below the studied regime (>= 1.25)",
                      stacklevel=2)
    bounds = tuple(dos.bounds if bounds is None else bounds)
    margin = search_margin_for(dos, target, N_S, bounds=bounds)
    cfg = IntervalConfig(tuple(target), margin, bounds)
    return cfg, optimize_degree(cfg, kind, epsilon, N_S), n_t

"""Benchmark mode: intensity model, bandwidth probe and filter timings."""
from __future__ import annotations

import glob
import json
import math
import time
from dataclasses import asdict, dataclass, field

import numpy as np

from .filters import FilterPolynomial, apply_filter
from .linalg import SparseMatrix, random_block


@dataclass(frozen=True)
class IntensityParams:
    """Per-row cost parameters of one Chebyshev recurrence step.

    N_nzr nonzeros per row, S_d / S_i bytes per value / index, F_a / F_m flops
    per scalar add / multiply.
    """

    N_nzr: float
    S_d: int
    S_i: int
    F_a: int
    F_m: int

    @classmethod
    def topi(cls) -> "IntensityParams":
        return cls(13, 16, 4, 2, 6)

    @classmethod
    def graphene(cls) -> "IntensityParams":
        return cls(4, 8, 4, 1, 1)

    @classmethod
    def from_matrix(cls, A: SparseMatrix) -> "IntensityParams":
        if np.iscomplexobj(A.values):
            return cls(A.nnz_per_row, 16, 4, 2, 6)
        return cls(A.nnz_per_row, 8, 4, 1, 1)

    @classmethod
    def resolve(cls, kind) -> "IntensityParams":
        if isinstance(kind, cls):
            return kind
        if kind == "topi":
            return cls.topi()
        if kind == "graphene":
            return cls.graphene()
        raise ValueError(f"unknown matrix kind {kind!r}")

    @property
    def flops_per_row(self) -> float:
        """Flops per row and vector for one step: spMVM plus the vector updates."""
        return float(self.N_nzr * (self.F_a + self.F_m)
                   + math.ceil(9 * self.F_a / 2) + math.ceil(11 * self.F_m / 2))

    def bytes_per_row(self, n_b: int) -> float:
        """Minimum memory traffic per row and vector, with perfect reuse."""
        return self.N_nzr / n_b * (self.S_d + self.S_i) + 5 * self.S_d


def intensity_model(kind, n_b: float) -> float:
    """Flops per byte of the fused filter step for block size n_b (may be inf)."""
    if not n_b >= 1:
        raise ValueError("n_b must be >= 1")
    p = IntensityParams.resolve(kind)
    return p.flops_per_row / p.bytes_per_row(n_b)


def last_level_cache_bytes() -> int:
    """Largest cache size listed under /sys, or 32 MiB if unavailable."""
    best = 0
    for path in glob.glob("/sys/devices/system/cpu/cpu0/cache/index*/size"):
        try:
            text = open(path).read().strip().upper()
        except OSError:
            continue
        mult = {"K": 1024, "M": 1024**2, "G": 1024**3}.get(text[-1:], 1)
        digits = text.rstrip("KMG")
        if digits.isdigit():
            best = max(best, int(digits) * mult)
    return best or 32 * 1024**2


def bandwidth_probe(size_bytes: int | None = None, repeats: int = 5) -> float:
    """Read bandwidth in GB/s from a streamed reduction (median of ``repeats``)."""
    llc = last_level_cache_bytes()
    if size_bytes is None:
        size_bytes = 8 * llc
    if size_bytes < 8 * llc:
        raise ValueError(f"array of {size_bytes} bytes is not 8x the cache size ({llc} bytes)")
    if repeats < 5:
        raise ValueError("need at least 5 repetitions")
    a = np.ones(size_bytes // 8)
    a.sum()
    times = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        a.sum()
        times.append(time.perf_counter() - t0)
    return a.nbytes / float(np.median(times)) / 1e9


@dataclass
class BenchRow:
    n_b: int
    N_p: int
    seconds: float
    flops: float
    gflops: float
    gbytes_per_s: float
    intensity: float
    roofline_gflops: float
    efficiency: float


@dataclass
class BenchReport:
    dim: int
    nnz_per_row: float
    scalar: str
    bandwidth_gbs: float
    params: IntensityParams
    rows: list = field(default_factory=list)
    omega: str = "not measured"

    def to_dict(self) -> dict:
        d = asdict(self)
        d["params"] = asdict(self.params)
        return d

    def write_json(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=2)

    def table(self) -> str:
        head = (f"D = {self.dim}, N_nzr = {self.nnz_per_row:.2f}, {self.scalar}, "
                f"b = {self.bandwidth_gbs:.2f} GB/s, Omega: {self.omega}\n")
        lines = [f"{'n_b':>5} {'N_p':>6} {'time[s]':>9} {'Gflop/s':>9} {'GB/s':>8} "
                 f"{'I(n_b)':>8} {'P*':>8} {'eff':>6}"]
        for r in self.rows:
            lines.append(f"{r.n_b:5d} {r.N_p:6d} {r.seconds:9.3f} {r.gflops:9.3f} "
                         f"{r.gbytes_per_s:8.2f} {r.intensity:8.4f} {r.roofline_gflops:8.3f} "
                         f"{r.efficiency:6.2f}")
        return head + "\n".join(lines)


def bench_filter(A: SparseMatrix, block_sizes=(1, 2, 4, 8, 16, 32), N_p: int = 100,
                 params=None, bandwidth: float | None = None, seed=0,
                 min_seconds: float = 0.2) -> BenchReport:
    """Time the filter for several block sizes and compare with the roofline bound.

    Flops follow the intensity-model convention: ``flops_per_row`` per row,
    vector and step. If a run is shorter than ``min_seconds`` the degree is
    doubled until it is not.
    """
    if N_p < 16:
        raise ValueError("N_p must be >= 16")
    params = IntensityParams.from_matrix(A) if params is None else IntensityParams.resolve(params)
    if bandwidth is None:
        bandwidth = bandwidth_probe()
    rng = np.random.default_rng(seed)
    report = BenchReport(A.dim, A.nnz_per_row, A.kind.value, bandwidth, params)
    # Gershgorin bound; the filter window itself does not affect the timing
    bound = float(abs(A.to_scipy()).sum(axis=1).max()) + 1.0
    for n_b in block_sizes:
        X = random_block(A.dim, n_b, rng, A.kind)
        degree = N_p
        apply_filter(A, X, FilterPolynomial.build((-0.1, 0.1), (-bound, bound), 16))
        while True:
            p = FilterPolynomial.build((-0.1, 0.1), (-bound, bound), degree)
            t0 = time.perf_counter()
            apply_filter(A, X, p)
            dt = time.perf_counter() - t0
            if dt >= min_seconds or degree >= 1 << 20:
                break
            degree *= 2
            X /= np.linalg.norm(X, axis=0)
        flops = float(degree) * A.dim * n_b * params.flops_per_row
        nbytes = float(degree) * A.dim * n_b * params.bytes_per_row(n_b)
        intensity = intensity_model(params, n_b)
        gflops = flops / dt / 1e9
        roof = intensity * bandwidth
        report.rows.append(BenchRow(n_b, degree, dt, flops, gflops, nbytes / dt / 1e9,
                                    intensity, roof, gflops / roof))
    return report

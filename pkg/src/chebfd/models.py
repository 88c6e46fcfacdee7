"""Test-matrix generators: diagonal model spectra, a 3D topological insulator, graphene."""
from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np
import scipy.sparse as sp

from .linalg import SparseMatrix


class Boundary(str, Enum):
    PERIODIC_XY_OPEN_Z = "periodic_xy_open_z"
    PERIODIC_ALL = "periodic_all"
    OPEN_ALL = "open_all"

    def periodic(self, axis: int) -> bool:
        if self is Boundary.PERIODIC_ALL:
            return True
        if self is Boundary.OPEN_ALL:
            return False
        return axis < 2


@dataclass(frozen=True)
class LatticeSpec:
    """Lattice geometry and disorder.

    ``onsite_potential`` is an optional real field with one value per lattice
    site, either flat (x fastest, then y, then z) or shaped ``(L_x, L_y, L_z)``.
    Graphene uses only ``L_x`` and ``L_y``.
    """

    L_x: int
    L_y: int
    L_z: int = 1
    t: float = 1.0
    V: float = 0.0
    onsite_potential: np.ndarray | None = None
    boundary: Boundary = Boundary.PERIODIC_XY_OPEN_Z
    seed: int | None = 0

    def __post_init__(self):
        for name in ("L_x", "L_y", "L_z"):
            if int(getattr(self, name)) < 1:
                raise ValueError(f"lattice dimension {name} must be >= 1")
        if self.V < 0:
            raise ValueError("disorder strength V must be >= 0")
        object.__setattr__(self, "boundary", Boundary(self.boundary))

    @property
    def shape(self) -> tuple[int, int, int]:
        return int(self.L_x), int(self.L_y), int(self.L_z)

    @property
    def num_sites(self) -> int:
        return self.L_x * self.L_y * self.L_z

    def site_potential(self, num_sites: int) -> np.ndarray:
        """Disorder draw V_n in [-V/2, V/2] plus the optional external field."""
        rng = np.random.default_rng(self.seed)
        pot = rng.uniform(-0.5 * self.V, 0.5 * self.V, num_sites) if self.V > 0 \
            else np.zeros(num_sites)
        if self.onsite_potential is not None:
            extra = np.asarray(self.onsite_potential, dtype=float)
            if extra.ndim > 1:
                extra = extra.ravel(order="F")
            if extra.size != num_sites:
                raise ValueError(f"onsite_potential has {extra.size} values, expected {num_sites}")
            pot = pot + extra
        return pot


_PAULI = (
    np.eye(2, dtype=complex),
    np.array([[0, 1], [1, 0]], dtype=complex),
    np.array([[0, -1j], [1j, 0]], dtype=complex),
    np.array([[1, 0], [0, -1]], dtype=complex),
)


def gamma_matrices() -> tuple[np.ndarray, ...]:
    """Five mutually anticommuting Hermitian 4x4 matrices (tau (x) sigma).

    G0 = tx s0, G1 = ty s0, G2..G4 = tz sx, tz sy, tz sz.
    """
    s0, sx, sy, sz = _PAULI
    return (np.kron(sx, s0), np.kron(sy, s0), np.kron(sz, sx), np.kron(sz, sy), np.kron(sz, sz))


def diag_flat(D: int, bounds=(-1.0, 1.0)) -> SparseMatrix:
    """Diagonal matrix with equidistant eigenvalues a + (b - a) i / (D + 1), i = 1..D."""
    if D < 1:
        raise ValueError("D must be >= 1")
    a, b = map(float, bounds)
    i = np.arange(1, D + 1)
    return SparseMatrix.diagonal(a + (b - a) * i / (D + 1))


def diag_linear(D: int) -> SparseMatrix:
    """Diagonal matrix whose spectrum samples rho(lambda) ~ |lambda| on [-1, 1]."""
    if D < 2 or D % 2:
        raise ValueError("D must be even and positive")
    half = D // 2
    pos = np.sqrt((np.arange(1, half + 1) - 0.5) / half)
    return SparseMatrix.diagonal(np.concatenate([-pos[::-1], pos]))


def _neighbours(spec_shape, axis, periodic):
    """(site, site + e_axis) index pairs, x fastest."""
    Lx, Ly, Lz = spec_shape
    x, y, z = np.meshgrid(np.arange(Lx), np.arange(Ly), np.arange(Lz), indexing="ij")
    coords = [x.ravel(order="F"), y.ravel(order="F"), z.ravel(order="F")]
    src = coords[0] + Lx * (coords[1] + Ly * coords[2])
    L = spec_shape[axis]
    shifted = coords[axis] + 1
    keep = np.ones(src.size, bool) if periodic else shifted < L
    if periodic and L == 1:
        keep[:] = False          # a bond from a site onto itself is not a hop
    moved = list(coords)
    moved[axis] = shifted % L
    dst = moved[0] + Lx * (moved[1] + Ly * moved[2])
    return src[keep], dst[keep]


def topological_insulator(spec: LatticeSpec) -> SparseMatrix:
    """Complex Hermitian slab Hamiltonian of a 3D topological insulator.

    Site n carries four orbitals (index 4 n + orb). Nearest-neighbour hops
    along e_j carry -t (G1 - i G_{j+1}) / 2 plus the conjugate; the on-site
    block is V_n G0 + 2 G1.
    """
    G = gamma_matrices()
    nsites = spec.num_sites
    dim = 4 * nsites
    pot = spec.site_potential(nsites)
    rows, cols, vals = [], [], []
    orb_r, orb_c = np.meshgrid(np.arange(4), np.arange(4), indexing="ij")
    orb_r, orb_c = orb_r.ravel(), orb_c.ravel()

    def add_blocks(dst, src, blocks):
        # blocks: (nbonds, 4, 4) or (4, 4) -> entries H[4 dst + a, 4 src + b]
        blocks = np.broadcast_to(blocks, (dst.size, 4, 4)).reshape(dst.size, 16)
        nz = np.abs(blocks) > 0
        r = (4 * dst[:, None] + orb_r[None, :])[nz]
        c = (4 * src[:, None] + orb_c[None, :])[nz]
        rows.append(r)
        cols.append(c)
        vals.append(blocks[nz])

    sites = np.arange(nsites)
    onsite = pot[:, None, None] * G[0][None] + 2.0 * G[1][None]
    add_blocks(sites, sites, onsite)
    for j in range(3):
        src, dst = _neighbours(spec.shape, j, spec.boundary.periodic(j))
        hop = -spec.t * (G[1] - 1j * G[j + 2]) / 2
        add_blocks(dst, src, hop)
        add_blocks(src, dst, hop.conj().T)
    coo = sp.coo_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                        shape=(dim, dim))
    return SparseMatrix.from_scipy(coo)


def graphene(spec: LatticeSpec) -> SparseMatrix:
    """Real symmetric honeycomb tight-binding matrix with on-site disorder.

    Unit cell (x, y) holds sublattices A (index 2 c) and B (2 c + 1); A(x, y)
    bonds to B(x, y), B(x-1, y) and B(x, y-1). The diagonal is always stored,
    even where it is zero. Boundaries are periodic unless ``open_all``.
    """
    Lx, Ly = int(spec.L_x), int(spec.L_y)
    ncell = Lx * Ly
    dim = 2 * ncell
    periodic = spec.boundary is not Boundary.OPEN_ALL
    x, y = np.meshgrid(np.arange(Lx), np.arange(Ly), indexing="ij")
    x, y = x.ravel(order="F"), y.ravel(order="F")
    cell = x + Lx * y
    pairs = [(cell, cell)]
    for dx, dy in ((-1, 0), (0, -1)):
        nx, ny = x + dx, y + dy
        ok = np.ones(ncell, bool) if periodic else (nx >= 0) & (ny >= 0)
        pairs.append((cell[ok], ((nx % Lx) + Lx * (ny % Ly))[ok]))
    a_idx = np.concatenate([2 * p[0] for p in pairs])
    b_idx = np.concatenate([2 * p[1] + 1 for p in pairs])
    hop = np.full(a_idx.size, -float(spec.t))
    diag = spec.site_potential(dim)
    rows = np.concatenate([a_idx, b_idx, np.arange(dim)])
    cols = np.concatenate([b_idx, a_idx, np.arange(dim)])
    data = np.concatenate([hop, hop, np.zeros(dim)])
    csr = sp.csr_matrix((data, (rows, cols)), shape=(dim, dim))
    csr.sum_duplicates()
    # keep explicit zeros on the diagonal: rebuild the diagonal after summing
    csr.setdiag(diag)
    return SparseMatrix.from_scipy(csr)

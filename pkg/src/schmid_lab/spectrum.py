"""Quasi-charge blocks of the coupled junction + line Hamiltonian.

At fixed quasi-charge ``nu`` the Hamiltonian on the basis
``|nu, s> x |n_1 ... n_Nm>`` is

    H = sum_s eps_s |s><s| + sum_k w_k a_k^+ a_k + i sum_k g_k (a_k^+ - a_k) N

with ``N`` the charge operator between bare bands.  Rephasing every state by
``i^(sum_k n_k)`` turns the coupling into ``N (x) sum_k g_k (a_k^+ + a_k)``
with real, positive ladder elements, so the block is real symmetric and
factorizes as ``diag + N (x) X``.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
import scipy.sparse as sp

from . import bare_junction, circuit_modes, fock_basis
from .bare_junction import BlochBlock
from .circuit_modes import LineSpec, ModeDecomposition
from .eigensolver import EigResult, lowest_eigenpairs
from .errors import DimensionMismatch, NotConverged
from .fock_basis import CutoffBasis
from .parallel import pmap


@dataclass(frozen=True, eq=False)
class SparseBlock:
    """Real symmetric block ``diag(diagonal) + n_mat (x) coupling``.

    Products are evaluated in the factored form; ``csr`` materializes the
    compressed-sparse-row matrix on demand.
    """

    diagonal: np.ndarray
    n_mat: np.ndarray
    coupling: sp.csr_matrix
    symmetric: bool = True

    @property
    def n_bands(self) -> int:
        return self.n_mat.shape[0]

    @property
    def n_occ(self) -> int:
        return self.coupling.shape[0]

    @property
    def dim(self) -> int:
        return self.diagonal.size

    @property
    def shape(self) -> tuple[int, int]:
        return (self.dim, self.dim)

    def __matmul__(self, x):
        x = np.asarray(x)
        flat = x.ndim == 1
        cols = 1 if flat else x.shape[1]
        v = x.reshape(self.n_bands, self.n_occ, cols)
        moved = v.transpose(1, 0, 2).reshape(self.n_occ, self.n_bands * cols)
        coupled = (self.coupling @ moved).reshape(self.n_occ, self.n_bands, cols)
        out = np.einsum("rs,jsc->rjc", self.n_mat, coupled, optimize=True).reshape(self.dim, cols)
        out += self.diagonal[:, None] * x.reshape(self.dim, cols)
        return out.ravel() if flat else out

    def matvec(self, x):
        return self @ x

    @cached_property
    def csr(self) -> sp.csr_matrix:
        mat = sp.kron(sp.csr_matrix(self.n_mat), self.coupling, format="csr")
        mat = mat + sp.diags(self.diagonal, format="csr")
        mat.sort_indices()
        return mat.tocsr()

    @property
    def row_offsets(self) -> np.ndarray:
        return self.csr.indptr

    @property
    def column_indices(self) -> np.ndarray:
        return self.csr.indices

    @property
    def values(self) -> np.ndarray:
        return self.csr.data

    def toarray(self) -> np.ndarray:
        return self.csr.toarray()


def _check_inputs(block: BlochBlock, md: ModeDecomposition, basis: CutoffBasis):
    if block.n_bands != basis.n_bands:
        raise DimensionMismatch(f"Bloch block has {block.n_bands} bands, basis has {basis.n_bands}")
    if md.omega.shape != basis.omega.shape or not np.allclose(md.omega, basis.omega, rtol=1e-13, atol=0):
        raise DimensionMismatch("mode frequencies differ between decomposition and basis")


def photon_coupling(md: ModeDecomposition, basis: CutoffBasis) -> sp.csr_matrix:
    """``sum_k g_k (a_k^+ + a_k)`` on the occupation space (rephased gauge)."""
    up = sp.csr_matrix((basis.n_occ, basis.n_occ))
    for g, raise_op in zip(md.g, basis.raising):
        up = up + g * raise_op
    return (up + up.T).tocsr()


def photon_quadrature(basis: CutoffBasis) -> sp.csr_matrix:
    """``sum_k (a_k^+ - a_k)`` in the rephased gauge.

    In that gauge ``sum_k (a_k + a_k^+) = -i sum_k (a_k^+ - a_k)``, so squared
    transition amplitudes of the physical field follow from this real
    antisymmetric operator.
    """
    up = sp.csr_matrix((basis.n_occ, basis.n_occ))
    for raise_op in basis.raising:
        up = up + raise_op
    return (up - up.T).tocsr()


def assemble(block: BlochBlock, md: ModeDecomposition, basis: CutoffBasis) -> SparseBlock:
    """Rephased real symmetric block; couplings leaving the cutoff are dropped."""
    _check_inputs(block, md, basis)
    diagonal = np.add.outer(block.energies, basis.photon_energy).ravel()
    return SparseBlock(diagonal, block.n_mat.copy(), photon_coupling(md, basis))


def assemble_complex(block: BlochBlock, md: ModeDecomposition, basis: CutoffBasis) -> sp.csr_matrix:
    """Same block in the plain Fock basis: complex Hermitian, coupling
    ``i g_k (a_k^+ - a_k) N``."""
    _check_inputs(block, md, basis)
    up = sp.csr_matrix((basis.n_occ, basis.n_occ), dtype=complex)
    for g, raise_op in zip(md.g, basis.raising):
        up = up + g * raise_op
    field_op = 1j * (up - up.T)
    diagonal = np.add.outer(block.energies, basis.photon_energy).ravel()
    mat = sp.kron(sp.csr_matrix(block.n_mat), field_op, format="csr") + sp.diags(diagonal.astype(complex))
    return mat.tocsr()


@dataclass(frozen=True)
class DiagSettings:
    """Truncation and solver parameters for one exact diagonalization."""

    e_cut: float = 15.0
    n_bands: int = 5
    k: int = 12
    tol: float = 1e-10
    m_max: int = bare_junction.DEFAULT_M_MAX
    method: str = "auto"
    max_restarts: int | None = None

    def replace(self, **changes) -> "DiagSettings":
        values = {f: getattr(self, f) for f in self.__dataclass_fields__}
        values.update(changes)
        return DiagSettings(**values)


@dataclass(frozen=True, eq=False)
class BlockSolution:
    spec: LineSpec
    nu: float
    modes: ModeDecomposition
    bloch: BlochBlock
    basis: CutoffBasis
    eig: EigResult

    @property
    def energies(self) -> np.ndarray:
        return self.eig.eigenvalues


@functools.lru_cache(maxsize=8)
def _modes_and_basis(wp: float, n_modes: int, z: float, e_cut: float, n_bands: int):
    md = circuit_modes.decompose_modes(LineSpec(0.0, wp, n_modes, z))
    if n_modes == 0:
        basis = fock_basis.generate(np.empty(0), e_cut, n_bands)
    else:
        basis = fock_basis.generate(md.omega, e_cut, n_bands)
    return md, basis


def solve_block(spec: LineSpec, nu: float, settings: DiagSettings = DiagSettings()) -> BlockSolution:
    """Diagonalize the coupled Hamiltonian at one quasi-charge."""
    md, basis = _modes_and_basis(spec.wp, spec.n_modes, spec.z, settings.e_cut, settings.n_bands)
    bloch = bare_junction.solve_bloch(spec.ej, nu, settings.n_bands, settings.m_max)
    h = assemble(bloch, md, basis)
    try:
        eig = lowest_eigenpairs(
            h, settings.k, settings.tol, method=settings.method, max_restarts=settings.max_restarts
        )
    except NotConverged as exc:
        raise NotConverged(
            f"{exc} at z={spec.z}, nu={nu}",
            exc.eigenvalues,
            exc.eigenvectors,
            exc.residuals,
            exc.iterations,
        ) from exc
    return BlockSolution(spec, float(nu), md, bloch, basis, eig)


def block_energies(spec: LineSpec, nu: float, settings: DiagSettings = DiagSettings()) -> np.ndarray:
    return solve_block(spec, nu, settings).energies


def _point_energies(args) -> np.ndarray:
    spec, nu, settings = args
    return block_energies(spec, nu, settings)


BAND_COLUMNS = ("z", "nu", "level", "energy", "energy_minus_ground", "rescaled_by_delta")


@dataclass
class BandTable:
    """Lowest levels on a (z, nu) grid.

    ``energies[i, j, :]`` are the levels at ``z_grid[i]``, ``nu_grid[j]``;
    ``ground[i]`` is the lowest level over the whole nu grid at ``z_grid[i]``.
    """

    spec: LineSpec
    z_grid: np.ndarray
    nu_grid: np.ndarray
    energies: np.ndarray
    settings: DiagSettings = field(default_factory=DiagSettings)

    @property
    def ground(self) -> np.ndarray:
        return self.energies[:, :, 0].min(axis=1)

    @property
    def delta(self) -> float:
        return self.spec.delta

    def rescaled(self) -> np.ndarray:
        return (self.energies - self.ground[:, None, None]) / self.delta

    def rows(self) -> list[tuple]:
        out = []
        ground = self.ground
        for i, z in enumerate(self.z_grid):
            for j, nu in enumerate(self.nu_grid):
                for lvl, e in enumerate(self.energies[i, j]):
                    rel = e - ground[i]
                    out.append((float(z), float(nu), lvl, float(e), float(rel), float(rel / self.delta)))
        return out


def band_sweep(
    spec: LineSpec,
    z_grid,
    nu_grid=None,
    k: int | None = None,
    settings: DiagSettings = DiagSettings(),
    workers: int | None = None,
) -> BandTable:
    """Lowest ``k`` levels at every (z, nu) point for the template ``spec``."""
    z_grid = np.asarray(z_grid, float)
    nu_grid = bare_junction.nu_grid() if nu_grid is None else np.asarray(nu_grid, float)
    if z_grid.size == 0 or nu_grid.size == 0:
        raise ValueError("z and nu grids must be nonempty")
    if k is not None:
        settings = settings.replace(k=k)
    jobs = [(spec.replace(z=float(z)), float(nu), settings) for z in z_grid for nu in nu_grid]
    levels = pmap(_point_energies, jobs, workers)
    width = min(len(x) for x in levels)
    energies = np.array([x[:width] for x in levels]).reshape(z_grid.size, nu_grid.size, width)
    return BandTable(spec, z_grid, nu_grid, energies, settings)


@dataclass
class ConvergenceTable:
    """Levels for every (e_cut, n_bands) pair, shape ``(len(e_cut_grid), len(n_bands_grid), k)``."""

    e_cut_grid: np.ndarray
    n_bands_grid: np.ndarray
    levels: np.ndarray

    def diffs_along_e_cut(self, band_index: int = -1) -> np.ndarray:
        lv = self.levels[:, band_index, :]
        return np.max(np.abs(np.diff(lv, axis=0)), axis=1)

    def diffs_along_n_bands(self, cut_index: int = -1) -> np.ndarray:
        lv = self.levels[cut_index, :, :]
        return np.max(np.abs(np.diff(lv, axis=0)), axis=1)


def convergence_study(
    spec: LineSpec,
    nu: float,
    e_cut_grid,
    n_bands_grid,
    settings: DiagSettings = DiagSettings(),
    workers: int | None = None,
) -> ConvergenceTable:
    e_cut_grid = np.asarray(e_cut_grid, float)
    n_bands_grid = np.asarray(n_bands_grid, int)
    if np.any(np.diff(e_cut_grid) <= 0) or np.any(np.diff(n_bands_grid) <= 0):
        raise ValueError("convergence grids must be strictly ascending")
    jobs = [
        (spec, float(nu), settings.replace(e_cut=float(ec), n_bands=int(nb)))
        for ec in e_cut_grid
        for nb in n_bands_grid
    ]
    levels = pmap(_point_energies, jobs, workers)
    width = min(len(x) for x in levels)
    arr = np.array([x[:width] for x in levels]).reshape(e_cut_grid.size, n_bands_grid.size, width)
    return ConvergenceTable(e_cut_grid, n_bands_grid, arr)


def exact_zero_ej_levels(md: ModeDecomposition, charges, e_max: float, count: int) -> np.ndarray:
    """Lowest ``count`` levels of the ``E_J = 0`` block at ``nu = 0``:
    ``4 p00^2 m^2 + sum_k n_k w_k`` enumerated over ``charges`` and all
    occupations below ``e_max``."""
    ec = md.p00**2
    photon = fock_basis.generate(md.omega, e_max, 1).photon_energy if md.n_modes else np.zeros(1)
    levels = np.concatenate([4.0 * ec * m * m + photon for m in charges])
    levels.sort()
    return levels[:count]


def free_spectral_range(spec: LineSpec) -> float:
    return spec.delta if spec.n_modes else math.inf

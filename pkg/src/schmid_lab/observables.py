"""Junction and photon observables computed from block eigenpairs."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import bare_junction
from .circuit_modes import LineSpec, ModeDecomposition
from .eigensolver import EigResult
from .errors import GroundMissing
from .fock_basis import CutoffBasis
from .parallel import pmap
from .spectrum import DiagSettings, photon_quadrature, solve_block

DEFAULT_GAMMA = 0.02
WINDOW_FRACTION = 0.8


def reduced_density_junction(vec, basis: CutoffBasis) -> np.ndarray:
    """Trace out the photons: ``rho[r, s] = sum_n psi[r, n] psi[s, n]``."""
    psi = np.asarray(vec, float).reshape(basis.n_bands, basis.n_occ)
    rho = psi @ psi.T
    return 0.5 * (rho + rho.T)


def charge_fluctuations(rho_j: np.ndarray, n_mat: np.ndarray, n2_mat: np.ndarray | None = None) -> float:
    """``tr(rho N^2) - tr(rho N)^2`` in the band basis.

    Pass the exact band-basis ``N^2`` elements as ``n2_mat`` (``BlochBlock.n2_mat``);
    without it ``n_mat @ n_mat`` is used, which is biased by the band truncation.
    """
    if rho_j.shape != n_mat.shape:
        raise ValueError(f"rho {rho_j.shape} and n_mat {n_mat.shape} differ")
    n2 = n_mat @ n_mat if n2_mat is None else n2_mat
    mean = float(np.trace(rho_j @ n_mat))
    return float(np.trace(rho_j @ n2)) - mean**2


def cos_expectation(rho_j: np.ndarray, cos_mat: np.ndarray) -> float:
    return float(np.trace(rho_j @ cos_mat))


@dataclass(frozen=True)
class GroundObservables:
    z: float
    energy: float
    sigma2: float
    cos_phi: float
    purity: float


def _ground_point(args) -> GroundObservables:
    spec, settings = args
    sol = solve_block(spec, 0.0, settings.replace(k=1))
    rho = reduced_density_junction(sol.eig.eigenvectors[:, 0], sol.basis)
    return GroundObservables(
        z=spec.z,
        energy=float(sol.energies[0]),
        sigma2=charge_fluctuations(rho, sol.bloch.n_mat, sol.bloch.n2_mat),
        cos_phi=cos_expectation(rho, sol.bloch.cos_mat),
        purity=float(np.trace(rho @ rho)),
    )


def ground_observables(spec: LineSpec, z_grid, settings: DiagSettings = DiagSettings(), workers=None):
    """Ground-state (nu = 0) energy, charge variance and <cos phi> versus z."""
    jobs = [(spec.replace(z=float(z)), settings) for z in z_grid]
    return pmap(_ground_point, jobs, workers)


def cooper_pair_box_variance(ej: float, m_max: int = bare_junction.DEFAULT_M_MAX) -> float:
    """Charge variance of the uncoupled junction ground state at nu = 0."""
    return bare_junction.ground_charge_variance(ej, 0.0, m_max)


@dataclass(frozen=True)
class GapTable:
    z: np.ndarray
    gap: np.ndarray
    delta: float

    @property
    def rescaled(self) -> np.ndarray:
        return self.gap / self.delta


def _edge_gap(args) -> float:
    spec, settings = args
    levels = solve_block(spec, 0.5, settings.replace(k=max(2, min(settings.k, 4)))).energies
    return float(levels[1] - levels[0])


def zone_edge_gap(spec: LineSpec, z_grid, settings: DiagSettings = DiagSettings(), workers=None) -> GapTable:
    """Splitting of the two lowest levels at the zone edge ``nu = 0.5``."""
    z_grid = np.asarray(z_grid, float)
    gaps = pmap(_edge_gap, [(spec.replace(z=float(z)), settings) for z in z_grid], workers)
    return GapTable(z_grid, np.array(gaps), spec.delta)


@dataclass(frozen=True)
class SpectralFunction:
    energies: np.ndarray
    values: np.ndarray
    gamma: float
    n_states: int
    transitions: np.ndarray
    weights: np.ndarray


def transition_weights(eig: EigResult, basis: CutoffBasis) -> tuple[np.ndarray, np.ndarray]:
    """Excitation energies ``E_n - E_G`` and ``|<G| sum_k (a_k + a_k^+) |E_n>|^2``.

    The eigenvectors live in the rephased real gauge where the field operator
    equals ``-i sum_k (a_k^+ - a_k)``; the phase drops out of the modulus.
    """
    if eig.k == 0:
        raise GroundMissing("no eigenpairs supplied")
    vecs = eig.eigenvectors
    quad = photon_quadrature(basis)
    ground = vecs[:, 0].reshape(basis.n_bands, basis.n_occ)
    applied = (quad @ ground.T).T.ravel()  # band index untouched
    amps = applied @ vecs
    return eig.eigenvalues - eig.eigenvalues[0], amps**2


def spectral_function(
    eig: EigResult,
    basis: CutoffBasis,
    md: ModeDecomposition | None,
    gamma: float = DEFAULT_GAMMA,
    e_grid=None,
    check_window: bool = True,
) -> SpectralFunction:
    """Lorentzian-broadened single-photon spectrum from the ground state.

    ``D(E) = sum_n gamma^2 / (gamma^2 + (E - E_n + E_G)^2) |<G|X|E_n>|^2``.
    Only the supplied eigenpairs contribute, so the grid must stay below
    ``0.8 (E_k - E_G)`` when ``check_window`` is set.
    """
    if gamma <= 0:
        raise ValueError("gamma must be positive")
    if md is not None and md.n_modes and not np.allclose(md.omega, basis.omega):
        raise ValueError("mode decomposition does not match the basis")
    trans, weights = transition_weights(eig, basis)
    if e_grid is None:
        e_grid = np.linspace(0.0, WINDOW_FRACTION * trans[-1], 401)
    e_grid = np.asarray(e_grid, float)
    if np.any(np.diff(e_grid) <= 0):
        raise ValueError("energy grid must be ascending")
    if check_window and e_grid.size and e_grid[-1] >= WINDOW_FRACTION * trans[-1]:
        raise ValueError(
            f"energy window up to {e_grid[-1]:.4g} exceeds 0.8 x highest computed "
            f"excitation {trans[-1]:.4g}; request more eigenpairs"
        )
    lor = gamma**2 / (gamma**2 + (e_grid[:, None] - trans[None, :]) ** 2)
    values = lor @ weights
    return SpectralFunction(e_grid, values, float(gamma), int(eig.k), trans, weights)


def peak_position(sf: SpectralFunction, lo: float = -math.inf, hi: float = math.inf) -> float:
    """Energy of the maximum of ``D(E)`` inside ``[lo, hi]``."""
    mask = (sf.energies >= lo) & (sf.energies <= hi)
    if not mask.any():
        raise ValueError("empty peak window")
    idx = np.flatnonzero(mask)
    return float(sf.energies[idx[np.argmax(sf.values[idx])]])


def squid_ej(ej_max: float, phi) -> np.ndarray:
    """Symmetric-SQUID Josephson energy ``ej_max |cos(pi phi)|`` (phi in flux quanta)."""
    ej = ej_max * np.abs(np.cos(np.pi * np.asarray(phi, float)))
    return np.where(ej < 1e-14 * ej_max, 0.0, ej)


@dataclass(frozen=True)
class SpectralMap:
    phi: np.ndarray
    energies: np.ndarray
    values: np.ndarray
    gamma: float

    def peaks(self, lo: float = -math.inf, hi: float = math.inf) -> np.ndarray:
        mask = (self.energies >= lo) & (self.energies <= hi)
        idx = np.flatnonzero(mask)
        return self.energies[idx[np.argmax(self.values[:, idx], axis=1)]]


def _flux_point(args) -> np.ndarray:
    spec, gamma, e_grid, settings = args
    sol = solve_block(spec, 0.0, settings)
    return spectral_function(sol.eig, sol.basis, sol.modes, gamma, e_grid).values


def flux_sweep(
    spec: LineSpec,
    phi_grid,
    gamma: float = DEFAULT_GAMMA,
    e_window=(0.0, 1.0),
    settings: DiagSettings = DiagSettings(),
    n_energies: int = 401,
    workers=None,
) -> SpectralMap:
    """``D(E)`` at ``nu = 0`` versus flux, with ``spec.ej`` the SQUID maximum."""
    phi_grid = np.asarray(phi_grid, float)
    if np.any(np.abs(phi_grid) > 0.5 + 1e-12):
        raise ValueError("flux grid must lie in [-0.5, 0.5]")
    e_grid = np.linspace(e_window[0], e_window[1], n_energies)
    ejs = squid_ej(spec.ej, phi_grid)
    jobs = [(spec.replace(ej=float(e)), gamma, e_grid, settings) for e in ejs]
    values = np.array(pmap(_flux_point, jobs, workers))
    return SpectralMap(phi_grid, e_grid, values, float(gamma))

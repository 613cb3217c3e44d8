import numpy as np
import pytest

from schmid_lab.bare_junction import solve_bloch
from schmid_lab.circuit_modes import LineSpec
from schmid_lab.eigensolver import EigResult
from schmid_lab.errors import GroundMissing
from schmid_lab.fock_basis import generate
from schmid_lab.observables import (
    charge_fluctuations,
    cooper_pair_box_variance,
    flux_sweep,
    ground_observables,
    peak_position,
    reduced_density_junction,
    spectral_function,
    squid_ej,
    transition_weights,
    zone_edge_gap,
)
from schmid_lab.spectrum import DiagSettings, solve_block

SMALL = DiagSettings(e_cut=5.0, n_bands=3, k=6)


def test_reduced_density_of_product_state_is_pure():
    basis = generate([0.5, 1.0], 2.0, 3)
    band = np.array([0.6, 0.8, 0.0])
    photons = np.zeros(basis.n_occ)
    photons[[0, 2]] = [np.sqrt(0.5), np.sqrt(0.5)]
    rho = reduced_density_junction(np.kron(band, photons), basis)
    assert np.allclose(rho, np.outer(band, band))
    assert np.trace(rho @ rho) == pytest.approx(1.0)


def test_reduced_density_of_schmidt_pair():
    # (|0>|a> + |1>|b>)/sqrt2 leaves a maximally mixed qubit
    basis = generate([1.0], 3.0, 2)
    psi = np.zeros((2, basis.n_occ))
    psi[0, 0] = psi[1, 2] = np.sqrt(0.5)
    rho = reduced_density_junction(psi.ravel(), basis)
    assert np.allclose(rho, 0.5 * np.eye(2))


def test_coupled_ground_density_is_a_valid_state():
    sol = solve_block(LineSpec(0.5, 2.0, 4, 1.2), 0.0, SMALL)
    rho = reduced_density_junction(sol.eig.eigenvectors[:, 0], sol.basis)
    assert np.trace(rho) == pytest.approx(1.0, abs=1e-12)
    assert np.min(np.linalg.eigvalsh(rho)) > -1e-12
    assert np.trace(rho @ rho) < 1.0 - 1e-3  # entangled with the line


def test_decoupled_ground_is_bare_projector():
    sol = solve_block(LineSpec(0.5, 2.0, 4, 0.0), 0.0, SMALL)
    rho = reduced_density_junction(sol.eig.eigenvectors[:, 0], sol.basis)
    expected = np.zeros_like(rho)
    expected[0, 0] = 1.0
    assert np.allclose(rho, expected, atol=1e-12)


def test_charge_fluctuations_shape_check():
    with pytest.raises(ValueError):
        charge_fluctuations(np.eye(2), np.eye(3))


def test_variance_vanishes_without_josephson_coupling():
    obs = ground_observables(LineSpec(0.0, 2.0, 3, 0.7), [0.7], SMALL)[0]
    assert obs.sigma2 == pytest.approx(0.0, abs=1e-12)
    assert obs.cos_phi == pytest.approx(0.0, abs=1e-12)


def test_weak_coupling_recovers_cooper_pair_box():
    obs = ground_observables(LineSpec(0.5, 2.0, 3, 1e-6), [1e-6], SMALL)[0]
    assert obs.sigma2 == pytest.approx(cooper_pair_box_variance(0.5), rel=1e-5)
    assert obs.purity == pytest.approx(1.0, abs=1e-8)
    assert obs.energy == pytest.approx(solve_bloch(0.5, 0.0, 1).energies[0], abs=1e-6)


def test_cos_bounded_and_positive():
    for obs in ground_observables(LineSpec(0.5, 2.0, 3, 1.0), [0.3, 1.0, 1.7], SMALL):
        assert 0.0 < obs.cos_phi <= 1.0
        assert obs.sigma2 > 0.0


def test_zone_edge_gap_decoupled_limit():
    spec = LineSpec(0.5, 2.0, 3, 1.0)
    gap = zone_edge_gap(spec, [0.0], SMALL)
    bare = solve_bloch(0.5, 0.5, 2).energies
    omega1 = solve_block(spec.replace(z=0.0), 0.5, SMALL).modes.omega[0]
    # lowest excitation is either the bare band splitting or a one-photon replica
    assert gap.gap[0] == pytest.approx(min(bare[1] - bare[0], omega1), abs=1e-10)
    assert gap.rescaled[0] == pytest.approx(gap.gap[0] / spec.delta)


def test_decoupled_spectrum_peaks_at_mode_frequencies():
    sol = solve_block(LineSpec(0.0, 2.0, 3, 0.0), 0.0, DiagSettings(e_cut=2.5, n_bands=1, k=20))
    trans, weights = transition_weights(sol.eig, sol.basis)
    one_photon = weights > 0.5
    assert np.allclose(np.sort(trans[one_photon]), sol.modes.omega)
    assert np.allclose(weights[one_photon], 1.0)
    assert np.allclose(weights[~one_photon], 0.0, atol=1e-20)
    w1 = sol.modes.omega[0]
    sf = spectral_function(sol.eig, sol.basis, sol.modes, 0.01, np.linspace(0.01, w1 + 0.2, 4001))
    assert peak_position(sf, 0, w1 + 0.1) == pytest.approx(w1, abs=1e-4)


def test_integrated_weight_independent_of_gamma():
    sol = solve_block(LineSpec(0.5, 2.0, 3, 1.0), 0.0, DiagSettings(e_cut=3.0, n_bands=3, k=12))
    trans, weights = transition_weights(sol.eig, sol.basis)
    grid = np.linspace(-60.0, 60.0, 600001)
    totals = []
    for gamma in (0.01, 0.02, 0.05):
        sf = spectral_function(sol.eig, sol.basis, sol.modes, gamma, grid, check_window=False)
        totals.append(np.trapezoid(sf.values, grid) / (np.pi * gamma))
    assert np.allclose(totals, weights.sum(), rtol=2e-3)


def test_spectral_function_guards():
    sol = solve_block(LineSpec(0.5, 2.0, 3, 1.0), 0.0, DiagSettings(e_cut=3.0, n_bands=3, k=4))
    top = sol.energies[-1] - sol.energies[0]
    with pytest.raises(ValueError, match="0.8"):
        spectral_function(sol.eig, sol.basis, sol.modes, 0.02, np.linspace(0, top, 11))
    with pytest.raises(ValueError):
        spectral_function(sol.eig, sol.basis, sol.modes, 0.0)
    with pytest.raises(ValueError):
        spectral_function(sol.eig, sol.basis, sol.modes, 0.02, [0.2, 0.1])
    empty = EigResult(np.zeros(0), np.zeros((sol.basis.dim, 0)), np.zeros(0), 0, "dense")
    with pytest.raises(GroundMissing):
        transition_weights(empty, sol.basis)


def test_squid_energy():
    phi = np.array([-0.5, -0.25, 0.0, 0.25, 0.5])
    ej = squid_ej(0.1, phi)
    assert ej[0] == 0.0 and ej[-1] == 0.0
    assert ej[2] == pytest.approx(0.1)
    assert ej[1] == pytest.approx(0.1 / np.sqrt(2))


def test_flux_sweep_is_symmetric_and_validated():
    spec = LineSpec(0.1, 2.0, 3, 1.0)
    settings = DiagSettings(e_cut=3.0, n_bands=3, k=8)
    smap = flux_sweep(spec, [-0.3, 0.0, 0.3], 0.02, (0.2, 0.6), settings, n_energies=81)
    assert smap.values.shape == (3, 81)
    assert np.allclose(smap.values[0], smap.values[2])
    assert smap.peaks().shape == (3,)
    with pytest.raises(ValueError):
        flux_sweep(spec, [0.7], settings=settings)

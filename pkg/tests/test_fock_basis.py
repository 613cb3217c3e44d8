import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from schmid_lab.circuit_modes import LineSpec, decompose_modes
from schmid_lab.errors import CapacityOverflow
from schmid_lab.fock_basis import generate, lookup, raising_operators

# convergence-study truncation (wp=2, z=1, N_m=6, e_cut=15, 5 bands); regression constant
REFERENCE_DIM = 106220


def brute_force(omega, e_cut):
    caps = [int(np.ceil(e_cut / w)) + 1 for w in omega]
    occs = [o for o in itertools.product(*(range(c) for c in caps)) if np.dot(o, omega) < e_cut]
    return sorted(occs)


def test_cutoff_below_first_mode_is_vacuum():
    basis = generate([0.7, 1.3], 0.5, 1)
    assert basis.dim == 1
    assert basis.occupations.tolist() == [[0, 0]]


def test_two_mode_enumeration():
    basis = generate([1.0, 2.0], 3.5, 1)
    assert basis.dim == 6
    assert sorted(map(tuple, basis.occupations.tolist())) == [(0, 0), (0, 1), (1, 0), (1, 1), (2, 0), (3, 0)]
    assert [tuple(o) for o in basis.occupations.tolist()] == brute_force([1.0, 2.0], 3.5)


@pytest.mark.parametrize("omega,e_cut", [([0.3, 0.7, 1.1], 2.5), ([0.5, 0.5, 0.9, 1.7], 3.0), ([2.0], 7.0)])
def test_matches_brute_force(omega, e_cut):
    basis = generate(omega, e_cut, 1)
    assert [tuple(o) for o in basis.occupations.tolist()] == brute_force(omega, e_cut)
    assert np.all(basis.photon_energy < e_cut)


def test_strict_cutoff():
    basis = generate([1.0], 3.0, 1)
    assert basis.occupations[:, 0].tolist() == [0, 1, 2]


def test_reference_dimension_regression():
    md = decompose_modes(LineSpec(0.5, 2.0, 6, 1.0))
    assert generate(md.omega, 15.0, 5).dim == REFERENCE_DIM


def test_tags_unique_sorted_and_reproducible():
    omega = decompose_modes(LineSpec(0.5, 2.0, 5, 1.0)).omega
    a = generate(omega, 8.0, 3)
    b = generate(omega, 8.0, 3)
    assert np.unique(a.tags).size == a.dim
    assert np.all(np.diff(a.tags) > 0)
    assert np.array_equal(a.tags, b.tags)
    assert np.array_equal(a.occupations, b.occupations)


def test_dimension_monotone_and_multiplicative():
    omega = [0.4, 0.9, 1.3]
    dims = [generate(omega, e, 1).dim for e in np.linspace(0.5, 6, 12)]
    assert all(x <= y for x, y in zip(dims, dims[1:]))
    assert generate(omega, 4.0, 4).dim == 4 * generate(omega, 4.0, 1).dim


def test_lookup_round_trip():
    basis = generate([0.45, 0.9, 1.2], 4.0, 3)
    for idx, state in enumerate(basis.states):
        assert lookup(basis, state.band, state.occ) == idx


def test_lookup_outside_cutoff():
    basis = generate([1.0, 2.0], 3.5, 2)
    assert lookup(basis, 0, (2, 1)) is None  # energy 4 >= 3.5
    assert lookup(basis, 0, (4, 0)) is None
    assert lookup(basis, 2, (0, 0)) is None
    assert lookup(basis, 0, (-1, 0)) is None
    assert lookup(basis, 0, (0,)) is None


def _linear_scan(basis, band, occ):
    for j, row in enumerate(basis.occupations):
        if tuple(row) == tuple(occ):
            return band * basis.n_occ + j
    return None


@pytest.mark.parametrize("scheme", ["positional", "hash"])
def test_lookup_against_linear_scan(scheme):
    omega = [0.3, 0.55, 0.8, 1.25]
    basis = generate(omega, 3.0, 2, scheme=scheme)
    rng = np.random.default_rng(5)
    for _ in range(1000):
        band = int(rng.integers(0, 2))
        occ = tuple(int(v) for v in rng.integers(0, 6, size=4))
        assert lookup(basis, band, occ) == _linear_scan(basis, band, occ)


@settings(max_examples=60, deadline=None)
@given(
    omega=st.lists(st.floats(0.2, 2.0), min_size=1, max_size=4).map(sorted),
    e_cut=st.floats(0.1, 4.0),
    occ=st.lists(st.integers(0, 8), min_size=4, max_size=4),
)
def test_lookup_property(omega, e_cut, occ):
    basis = generate(omega, e_cut, 1)
    occ = occ[: len(omega)]
    assert lookup(basis, 0, occ) == _linear_scan(basis, 0, occ)


def test_hash_and_positional_agree():
    omega = [0.3, 0.7, 1.1]
    pos = generate(omega, 3.0, 2, scheme="positional")
    hsh = generate(omega, 3.0, 2, scheme="hash")
    assert np.array_equal(pos.occupations, hsh.occupations)
    assert pos.scheme == "positional" and hsh.scheme == "hash"


def test_capacity_overflow_falls_back_to_hash():
    omega = np.full(40, 1.0) + np.linspace(0, 0.01, 40)
    basis = generate(omega, 3.0, 2)
    assert basis.scheme == "hash"
    with pytest.raises(CapacityOverflow):
        generate(omega, 3.0, 2, scheme="positional")
    occ = np.zeros(40, int)
    occ[7] = 2
    idx = lookup(basis, 1, occ)
    assert idx is not None and tuple(basis.occupations[idx - basis.n_occ]) == tuple(occ)


@pytest.mark.parametrize(
    "omega,e_cut,n_bands",
    [([1.0, 0.5], 2.0, 1), ([0.0, 1.0], 2.0, 1), ([1.0], 0.0, 1), ([1.0], 1.0, 0), ([[1.0]], 1.0, 1)],
)
def test_invalid_inputs(omega, e_cut, n_bands):
    with pytest.raises(ValueError):
        generate(omega, e_cut, n_bands)


def test_unknown_scheme():
    with pytest.raises(ValueError):
        generate([1.0], 2.0, 1, scheme="other")


def test_raising_operators():
    basis = generate([1.0, 2.0], 3.5, 1)
    ops = raising_operators(basis)
    i00 = lookup(basis, 0, (0, 0))
    i10 = lookup(basis, 0, (1, 0))
    i20 = lookup(basis, 0, (2, 0))
    assert ops[0][i10, i00] == 1.0
    assert ops[0][i20, i10] == pytest.approx(np.sqrt(2))
    # (1,1) -> (1,2) leaves the cutoff and is dropped
    assert ops[1][:, lookup(basis, 0, (1, 1))].nnz == 0
    assert basis.raising[0].nnz == ops[0].nnz


def test_dump_format():
    basis = generate([1.0, 2.0], 2.5, 2)
    lines = basis.dump().splitlines()
    assert len(lines) == basis.dim
    tag, band, *occ = map(int, lines[-1].split())
    assert band == 1 and tuple(occ) == tuple(basis.occupations[-1])
    assert tag == int(basis.tags[-1])

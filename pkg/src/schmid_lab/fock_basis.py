"""Truncated product basis ``|band> x |n_1 ... n_Nm>`` under a photon-energy cutoff.

States are ordered band-major, then lexicographically in the occupation
vector with mode 1 most significant.  Every state carries an integer tag that
increases along that order (positional mixed-radix code) so lookups are a
binary search.  When the radix product does not fit in 63 bits the basis
falls back to 64-bit multiplicative hash tags, still collision-checked, and
lookups go through a sorted permutation instead.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np
import scipy.sparse as sp

from .errors import CapacityOverflow

_INT63 = 2**63 - 1
_HASH_SEED = 0x5EED_CAFE


@dataclass(frozen=True)
class BasisState:
    band: int
    occ: tuple[int, ...]
    tag: int


@dataclass(frozen=True, eq=False)
class CutoffBasis:
    """Enumerated basis; bands are 0-based.

    ``occupations`` has one row per admissible occupation vector, in
    enumeration order; the full state ``(band, j)`` sits at index
    ``band * n_occ + j``.
    """

    omega: np.ndarray
    e_cut: float
    n_bands: int
    occupations: np.ndarray
    photon_energy: np.ndarray
    scheme: str
    occ_tags: np.ndarray
    mode_weights: np.ndarray
    band_weight: int

    @property
    def n_occ(self) -> int:
        return self.occupations.shape[0]

    @property
    def n_modes(self) -> int:
        return self.occupations.shape[1]

    @property
    def dim(self) -> int:
        return self.n_bands * self.n_occ

    def __len__(self) -> int:
        return self.dim

    @cached_property
    def tags(self) -> np.ndarray:
        bands = np.arange(self.n_bands, dtype=self.occ_tags.dtype)
        return (bands[:, None] * self.occ_tags.dtype.type(self.band_weight) + self.occ_tags[None, :]).ravel()

    @cached_property
    def _sorted(self) -> tuple[np.ndarray, np.ndarray]:
        # positional tags are already sorted; hashed ones need a permutation
        if self.scheme == "positional":
            return self.occ_tags, np.arange(self.n_occ)
        order = np.argsort(self.occ_tags, kind="stable")
        return self.occ_tags[order], order

    @property
    def states(self) -> list[BasisState]:
        tags = self.tags
        return [
            BasisState(b, tuple(int(n) for n in occ), int(tags[b * self.n_occ + j]))
            for b in range(self.n_bands)
            for j, occ in enumerate(self.occupations)
        ]

    def occ_tag(self, occ) -> int:
        occ = np.asarray(occ, dtype=np.int64)
        return int(self._encode(occ[None, :])[0])

    def _encode(self, occs: np.ndarray) -> np.ndarray:
        if self.scheme == "positional":
            return occs @ self.mode_weights
        with np.errstate(over="ignore"):
            return (occs.astype(np.uint64) * self.mode_weights[None, :]).sum(axis=1, dtype=np.uint64)

    def find_occ(self, occs) -> np.ndarray:
        """Occupation-row indices for each row of ``occs``; -1 where absent."""
        occs = np.atleast_2d(np.asarray(occs, dtype=np.int64))
        out = np.full(occs.shape[0], -1, dtype=np.int64)
        valid = np.all(occs >= 0, axis=1)
        if self.scheme == "positional":
            valid &= np.all(occs < self.mode_weights_capacity[None, :], axis=1)
        if not valid.any():
            return out
        keys = self._encode(occs[valid])
        sorted_tags, order = self._sorted
        pos = np.searchsorted(sorted_tags, keys)
        pos_c = np.minimum(pos, sorted_tags.size - 1)
        hit = sorted_tags[pos_c] == keys
        idx = np.where(hit, order[pos_c], -1)
        # hash tags can alias an absent vector onto a present one
        if self.scheme == "hash":
            ok = idx >= 0
            ok[ok] = np.all(self.occupations[idx[ok]] == occs[valid][ok], axis=1)
            idx = np.where(ok, idx, -1)
        out[valid] = idx
        return out

    @cached_property
    def raising(self) -> list[sp.csr_matrix]:
        """Per-mode raising operators, built once per basis."""
        return raising_operators(self)

    @cached_property
    def mode_weights_capacity(self) -> np.ndarray:
        return mode_capacities(self.omega, self.e_cut)

    def dump(self) -> str:
        """One line per state: ``tag band n_1 ... n_Nm``."""
        tags = self.tags
        lines = []
        for b in range(self.n_bands):
            for j, occ in enumerate(self.occupations):
                lines.append(" ".join(str(int(v)) for v in (tags[b * self.n_occ + j], b, *occ)))
        return "\n".join(lines) + "\n"


def mode_capacities(omega, e_cut: float) -> np.ndarray:
    """Per-mode radix ``ceil(e_cut / omega_k)``; occupations stay strictly below it."""
    omega = np.asarray(omega, float)
    return np.maximum(np.ceil(e_cut / omega).astype(np.int64), 1)


def _enumerate(omega: np.ndarray, e_cut: float) -> tuple[np.ndarray, np.ndarray]:
    # Breadth-wise expansion of the depth-first recursion; yields the same
    # lexicographic order (earlier modes vary slowest).
    occs = np.zeros((1, 0), dtype=np.int64)
    energy = np.zeros(1)
    for w in omega:
        budget = e_cut - energy
        counts = np.ceil(budget / w).astype(np.int64) + 1
        counts = np.maximum(counts, 0)
        parent = np.repeat(np.arange(energy.size), counts)
        starts = np.cumsum(counts) - counts
        n = np.arange(parent.size) - np.repeat(starts, counts)
        new_energy = energy[parent] + n * w
        keep = new_energy < e_cut
        parent, n, new_energy = parent[keep], n[keep], new_energy[keep]
        occs = np.concatenate((occs[parent], n[:, None]), axis=1)
        energy = new_energy
    return occs, energy


def generate(omega, e_cut: float, n_bands: int, scheme: str = "auto") -> CutoffBasis:
    """Enumerate ``{(band, n) : sum_k omega_k n_k < e_cut}``.

    ``scheme`` is ``"auto"``, ``"positional"`` or ``"hash"``.  Forcing
    ``"positional"`` when the radix product overflows raises
    ``CapacityOverflow``; so does a (vanishingly unlikely) hash collision.
    """
    omega = np.asarray(omega, float)
    if omega.ndim != 1 or np.any(omega <= 0):
        raise ValueError("omega must be a 1-d array of positive frequencies")
    if np.any(np.diff(omega) < 0):
        raise ValueError("omega must be ascending")
    if not e_cut > 0:
        raise ValueError("e_cut must be positive")
    if n_bands < 1:
        raise ValueError("n_bands must be >= 1")

    occs, energy = _enumerate(omega, e_cut)
    caps = mode_capacities(omega, e_cut)
    span = math.prod(int(c) for c in caps)
    fits = span * n_bands <= _INT63
    if scheme == "auto":
        scheme = "positional" if fits else "hash"
    if scheme == "positional":
        if not fits:
            raise CapacityOverflow(f"radix product {span} x {n_bands} bands exceeds int64")
        weights = np.ones(omega.size, dtype=np.int64)
        for k in range(omega.size - 2, -1, -1):
            weights[k] = weights[k + 1] * caps[k + 1]
        occ_tags = occs @ weights if omega.size else np.zeros(occs.shape[0], dtype=np.int64)
        band_weight = span
    elif scheme == "hash":
        rng = np.random.default_rng(_HASH_SEED)
        raw = rng.integers(0, 2**63, size=omega.size + 1, dtype=np.int64).astype(np.uint64)
        weights = raw[:-1] * np.uint64(2) + np.uint64(1)
        with np.errstate(over="ignore"):
            occ_tags = (occs.astype(np.uint64) * weights[None, :]).sum(axis=1, dtype=np.uint64)
        band_weight = int(raw[-1] | np.uint64(1))
        if np.unique(occ_tags).size != occ_tags.size:
            raise CapacityOverflow("hash tag collision; basis too large for 64-bit tags")
    else:
        raise ValueError(f"unknown tag scheme {scheme!r}")
    occs.setflags(write=False)
    return CutoffBasis(
        omega=omega,
        e_cut=float(e_cut),
        n_bands=int(n_bands),
        occupations=occs,
        photon_energy=energy,
        scheme=scheme,
        occ_tags=occ_tags,
        mode_weights=weights,
        band_weight=band_weight,
    )


def lookup(basis: CutoffBasis, band: int, occ) -> int | None:
    """Index of ``(band, occ)`` in the basis, or ``None`` when it lies outside."""
    if not 0 <= band < basis.n_bands:
        return None
    occ = np.asarray(occ, dtype=np.int64)
    if occ.shape != (basis.n_modes,):
        return None
    j = int(basis.find_occ(occ[None, :])[0])
    if j < 0:
        return None
    return band * basis.n_occ + j


def raising_operators(basis: CutoffBasis) -> list[sp.csr_matrix]:
    """Per-mode ``a_k^+`` on the occupation space, truncated to the basis.

    Entry ``[target, source] = sqrt(n_k + 1)``; raisings that leave the cutoff
    are dropped.
    """
    ops = []
    n_occ = basis.n_occ
    for k in range(basis.n_modes):
        target = basis.occupations.copy()
        target[:, k] += 1
        idx = basis.find_occ(target)
        src = np.flatnonzero(idx >= 0)
        vals = np.sqrt(basis.occupations[src, k] + 1.0)
        ops.append(sp.csr_matrix((vals, (idx[src], src)), shape=(n_occ, n_occ)))
    return ops

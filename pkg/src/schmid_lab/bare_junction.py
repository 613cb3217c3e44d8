"""Bloch bands of the isolated junction ``4 N^2 - E_J cos(phi)``.

At quasi-charge ``nu`` the junction lives on charges ``nu + m`` with integer
``m`` in ``[-m_max, m_max]``.  The cosine hops the charge by one, so the block
is a real symmetric tridiagonal matrix.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import TruncationTooSmall

DEFAULT_M_MAX = 30


@dataclass(frozen=True)
class BlochBlock:
    """Bare-junction bands at one quasi-charge and their operator matrix elements.

    ``vectors[:, s]`` holds the charge-basis coefficients of band ``s`` over
    ``charges``.  ``n_mat``, ``n2_mat`` and ``cos_mat`` are the matrix elements
    of ``N``, ``N^2`` and ``cos(phi)`` between the retained bands.
    """

    nu: float
    ej: float
    energies: np.ndarray
    vectors: np.ndarray
    charges: np.ndarray
    n_mat: np.ndarray
    n2_mat: np.ndarray
    cos_mat: np.ndarray

    @property
    def n_bands(self) -> int:
        return self.energies.size


def junction_block(ej: float, nu: float, m_max: int = DEFAULT_M_MAX) -> np.ndarray:
    """Dense tridiagonal junction Hamiltonian over charges ``nu + m``."""
    if m_max < 1:
        raise ValueError(f"m_max must be >= 1, got {m_max}")
    charges = nu + np.arange(-m_max, m_max + 1)
    off = np.full(2 * m_max, -0.5 * ej)
    return np.diag(4.0 * charges**2) + np.diag(off, 1) + np.diag(off, -1)


def solve_bloch(ej: float, nu: float, n_bands: int, m_max: int = DEFAULT_M_MAX) -> BlochBlock:
    """Lowest ``n_bands`` eigenpairs of the junction block at quasi-charge ``nu``.

    Eigenvectors are sign-fixed so their largest-magnitude coefficient is
    positive.

    Raises
    ------
    TruncationTooSmall
        If the top requested band reaches within 1% of ``4 (m_max - 1)^2``,
        where the charge truncation starts to bias the bands.
    """
    dim = 2 * m_max + 1
    if not 1 <= n_bands <= dim:
        raise ValueError(f"n_bands must lie in [1, {dim}], got {n_bands}")
    if m_max < 1:
        raise ValueError(f"m_max must be >= 1, got {m_max}")
    charges = nu + np.arange(-m_max, m_max + 1)
    if nu == 0.0:
        energies, vectors = _parity_resolved(ej, m_max, n_bands)
    else:
        diag = 4.0 * charges**2
        off = np.full(2 * m_max, -0.5 * ej)
        energies, vectors = scipy.linalg.eigh_tridiagonal(
            diag, off, select="i", select_range=(0, n_bands - 1), lapack_driver="stemr"
        )
    boundary = 4.0 * (m_max - 1) ** 2
    if energies[-1] >= 0.99 * boundary:
        raise TruncationTooSmall(
            f"band {n_bands} at {energies[-1]:.4g} is too close to the m_max={m_max} "
            f"boundary {boundary:.4g}; increase m_max"
        )
    vectors = _fix_signs(vectors)
    n_mat = vectors.T @ (charges[:, None] * vectors)
    n2_mat = vectors.T @ ((charges**2)[:, None] * vectors)
    hopped = np.zeros_like(vectors)
    hopped[:-1] += vectors[1:]
    hopped[1:] += vectors[:-1]
    cos_mat = 0.5 * vectors.T @ hopped
    return BlochBlock(
        nu=float(nu),
        ej=float(ej),
        energies=energies,
        vectors=vectors,
        charges=charges,
        n_mat=_symmetrize(n_mat),
        n2_mat=_symmetrize(n2_mat),
        cos_mat=_symmetrize(cos_mat),
    )


def band_energies(ej: float, nu_grid, n_bands: int, m_max: int = DEFAULT_M_MAX) -> np.ndarray:
    """Band table of shape ``(len(nu_grid), n_bands)``."""
    return np.array([solve_bloch(ej, nu, n_bands, m_max).energies for nu in nu_grid])


def nu_grid(points: int = 51) -> np.ndarray:
    """Closed uniform quasi-charge grid on ``[0, 0.5]``."""
    return np.linspace(0.0, 0.5, points)


def ground_charge_variance(ej: float, nu: float = 0.0, m_max: int = DEFAULT_M_MAX) -> float:
    """Charge variance of the bare ground band (the Cooper-pair-box value at nu=0)."""
    block = solve_bloch(ej, nu, 1, m_max)
    return float(block.n2_mat[0, 0] - block.n_mat[0, 0] ** 2)


def _parity_resolved(ej: float, m_max: int, n_bands: int) -> tuple[np.ndarray, np.ndarray]:
    """Zone-center bands from the even and odd charge-parity sectors.

    The +-m pairs are split only at order ej^(2m), far below rounding for the
    upper bands, so a joint solve would return arbitrary mixtures; solving the
    sectors separately keeps every band a parity eigenstate.
    """
    m = np.arange(1, m_max + 1)
    even_off = np.full(m_max, -0.5 * ej)
    even_off[0] *= np.sqrt(2.0)
    even_e, even_v = scipy.linalg.eigh_tridiagonal(
        4.0 * np.concatenate(([0.0], m**2.0)), even_off, lapack_driver="stemr"
    )
    odd_e, odd_v = scipy.linalg.eigh_tridiagonal(4.0 * m**2.0, np.full(m_max - 1, -0.5 * ej), lapack_driver="stemr")
    dim = 2 * m_max + 1
    center = m_max
    even_full = np.zeros((dim, even_e.size))
    even_full[center] = even_v[0]
    even_full[center + m] = even_v[1:] / np.sqrt(2.0)
    even_full[center - m] = even_v[1:] / np.sqrt(2.0)
    odd_full = np.zeros((dim, odd_e.size))
    odd_full[center + m] = odd_v / np.sqrt(2.0)
    odd_full[center - m] = -odd_v / np.sqrt(2.0)
    energies = np.concatenate((even_e, odd_e))
    vectors = np.concatenate((even_full, odd_full), axis=1)
    order = np.argsort(energies, kind="stable")[:n_bands]
    return energies[order], vectors[:, order]


def _fix_signs(vectors: np.ndarray) -> np.ndarray:
    idx = np.argmax(np.abs(vectors), axis=0)
    signs = np.sign(vectors[idx, np.arange(vectors.shape[1])])
    signs[signs == 0] = 1.0
    return vectors * signs


def _symmetrize(mat: np.ndarray) -> np.ndarray:
    return 0.5 * (mat + mat.T)

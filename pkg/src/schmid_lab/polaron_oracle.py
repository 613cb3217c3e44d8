"""Displaced-oscillator analytics used as an independent check of the
exact-diagonalization pipeline."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg
from scipy.special import gammaln


@dataclass(frozen=True)
class DisplacedState:
    """``D(alpha)|n>``, normalized by construction."""

    alpha: complex
    n: int

    def __post_init__(self):
        if self.n < 0:
            raise ValueError("occupation must be non-negative")


def assoc_laguerre(n: int, k: int, x: float) -> float:
    """Generalized Laguerre polynomial ``L_n^(k)(x)`` by upward recurrence.

    Negative ``k`` is allowed; the three-term recurrence holds for any order.
    """
    if n < 0:
        raise ValueError("degree must be non-negative")
    prev, cur = 1.0, 1.0 + k - x
    if n == 0:
        return prev
    for j in range(1, n):
        prev, cur = cur, ((2 * j + 1 + k - x) * cur - (j + k) * prev) / (j + 1)
    return cur


def _log_factorial(n: int) -> float:
    return float(gammaln(n + 1))


def displaced_overlap(beta: complex, m: int, alpha: complex, n: int) -> complex:
    """``<beta, m | alpha, n>`` for displaced number states."""
    if m < n:
        return displaced_overlap(alpha, n, beta, m).conjugate()
    alpha = complex(alpha)
    beta = complex(beta)
    d = alpha - beta
    x = abs(d) ** 2
    phase = np.exp(0.5 * (alpha * beta.conjugate() - alpha.conjugate() * beta))
    envelope = math.exp(-0.5 * x)
    ratio = math.exp(0.5 * (_log_factorial(n) - _log_factorial(m)))
    power = d ** (m - n) if m > n else 1.0
    return complex(phase * envelope * ratio * power * assoc_laguerre(n, m - n, x))


def shift_spectrum_check(omega: float, g: float, n_charge: float, cutoff: int, levels: int = 10) -> float:
    """Max deviation of the lowest levels of ``w a^+a + i N g (a^+ - a)`` in a
    truncated Fock space from the shifted ladder ``w n - N^2 g^2 / w``."""
    levels = min(levels, cutoff)
    n = np.arange(cutoff)
    raise_op = np.diag(np.sqrt(n[1:]), -1).astype(complex)
    ham = np.diag(omega * n).astype(complex) + 1j * n_charge * g * (raise_op - raise_op.conj().T)
    evals = scipy.linalg.eigh(ham, eigvals_only=True, subset_by_index=(0, levels - 1))
    exact = omega * np.arange(levels) - n_charge**2 * g**2 / omega
    return float(np.max(np.abs(evals - exact)))


def displacements(omega, g, charge) -> np.ndarray:
    """Per-mode displacement ``alpha_{N,k} = i N g_k / omega_k``."""
    return 1j * charge * np.asarray(g, float) / np.asarray(omega, float)


def dressed_element(mode_data, N, M, occ_m, occ_n, hj_element, gauge: str = "physical") -> complex:
    """Junction matrix element ``<M, m| H_J |N, n>`` between displaced product states.

    ``mode_data`` is a ``ModeDecomposition`` or an ``(omega, g)`` pair.  The
    bare element ``<M|H_J|N>`` is passed in as ``hj_element``.

    With ``gauge="physical"`` the element is the literal product of
    single-mode overlaps and carries a phase ``i^(m_k - n_k)`` per mode.
    ``gauge="real"`` drops those phases, which is the element between states
    rephased by ``i^(sum n)``; it is real for real inputs and equals the
    Franck-Condon product
    ``exp(-|N-M|^2/2 sum g^2/w^2) prod sqrt(n!/m!) (g(N-M)/w)^(m-n) L_n^(m-n)``.
    """
    omega, g = _mode_arrays(mode_data)
    occ_m = np.asarray(occ_m, int)
    occ_n = np.asarray(occ_n, int)
    if N == M:
        return complex(hj_element) if np.array_equal(occ_m, occ_n) else 0j
    y = g * (N - M) / omega
    x = y**2
    value = complex(hj_element) * math.exp(-0.5 * float(np.sum(x)))
    for yk, xk, mk, nk in zip(y, x, occ_m, occ_n):
        lo, hi = min(mk, nk), max(mk, nk)
        factor = math.exp(0.5 * (_log_factorial(lo) - _log_factorial(hi))) * assoc_laguerre(lo, hi - lo, xk)
        # m < n branch: sqrt(n!/m!) y^(m-n) L_n^(m-n)(y^2) = (-y)^(n-m) sqrt(m!/n!) L_m^(n-m)(y^2)
        factor *= yk ** (mk - nk) if mk >= nk else (-yk) ** (nk - mk)
        if gauge == "physical":
            factor *= 1j ** (mk - nk)
        elif gauge != "real":
            raise ValueError(f"unknown gauge {gauge!r}")
        value *= factor
    return value


def _mode_arrays(mode_data) -> tuple[np.ndarray, np.ndarray]:
    if hasattr(mode_data, "omega") and hasattr(mode_data, "g"):
        return np.asarray(mode_data.omega, float), np.asarray(mode_data.g, float)
    omega, g = mode_data
    return np.atleast_1d(np.asarray(omega, float)), np.atleast_1d(np.asarray(g, float))


def displaced_basis_hamiltonian(omega: float, g: float, ej: float, charges, n_max: int) -> np.ndarray:
    """One-mode Hamiltonian ``4N^2 - ej cos(phi) + w a^+a + i N g (a^+ - a)`` on a
    few charge states, written in the displaced basis ``|N, alpha_N, n>``
    (``n < n_max``) with the dressed junction elements, physical gauge."""
    charges = list(charges)
    dim = len(charges) * n_max
    ham = np.zeros((dim, dim), complex)
    for a, M in enumerate(charges):
        for b, N in enumerate(charges):
            if a == b:
                shift = 4.0 * N**2 - N**2 * g**2 / omega
                idx = a * n_max + np.arange(n_max)
                ham[idx, idx] = omega * np.arange(n_max) + shift
            elif abs(M - N) == 1:
                for m in range(n_max):
                    for n in range(n_max):
                        ham[a * n_max + m, b * n_max + n] = dressed_element(
                            ([omega], [g]), N, M, [m], [n], -0.5 * ej
                        )
    return ham


def fock_basis_hamiltonian(omega: float, g: float, ej: float, charges, cutoff: int) -> np.ndarray:
    """The same one-mode Hamiltonian in the undisplaced Fock basis (``n < cutoff``)."""
    charges = np.asarray(list(charges), float)
    nc = charges.size
    n = np.arange(cutoff)
    raise_op = np.diag(np.sqrt(n[1:]), -1)
    hop = np.zeros((nc, nc))
    for a in range(nc):
        for b in range(nc):
            if abs(charges[a] - charges[b]) == 1:
                hop[a, b] = -0.5 * ej
    junction = np.diag(4.0 * charges**2) + hop
    return (
        np.kron(junction, np.eye(cutoff))
        + np.kron(np.eye(nc), np.diag(omega * n))
        + 1j * g * np.kron(np.diag(charges), raise_op - raise_op.T)
    ).astype(complex)

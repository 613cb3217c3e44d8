"""Normal modes of a Josephson junction terminating an open LC chain.

Units: hbar = 1 and E_C = 1, so every energy and frequency is a plain float.

Dimensionless reduction
-----------------------
The chain has N_m cells of inductance L and shunt capacitance C; node 0 is the
junction island with capacitance C_J = e^2 / (2 E_C).  Writing the Lagrangian
as ``(1/16) phi_dot^T C phi_dot - (1/16) phi^T Gamma phi`` in units of E_C and
hbar / E_C makes both matrices dimensionless:

* capacitance matrix ``diag(1, c, ..., c)`` with ``c = C / C_J``;
* inductance matrix ``ell * tridiag(-1; [1, 2, ..., 2, 1]; -1)`` with
  ``ell = hbar^2 / (E_C^2 C_J L)``.

With ``L = 2 Z / omega_p``, ``C = 2 / (Z omega_p)`` (from ``Z = sqrt(L/C)``
and ``omega_p = 2 / sqrt(LC)``) and ``hbar / e^2 = 2 R_q / pi``::

    c   = 4 hbar / (e^2 Z wp) = (8 / pi) * z / wp
    ell = c * wp**2 / 4       = (2 / pi) * z * wp

where ``z = R_q / Z`` and ``wp = hbar omega_p / E_C``.  The bulk ratio
``ell / c = wp**2 / 4`` reproduces the lumped-line plasma cutoff and the
free spectral range is ``pi * wp / (2 N_m)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import MoreThanOneZeroMode, NotConverged

KERNEL_RTOL = 1e-10


@dataclass(frozen=True)
class LineSpec:
    """Physical inputs of one junction + transmission-line circuit.

    Parameters
    ----------
    ej : float
        Josephson energy E_J / E_C.
    wp : float
        Plasma frequency hbar omega_p / E_C.
    n_modes : int
        Number of photonic modes N_m (0 means a bare junction).
    z : float
        Impedance ratio R_q / Z.
    """

    ej: float
    wp: float
    n_modes: int
    z: float

    def __post_init__(self):
        for name in ("ej", "wp", "z"):
            value = getattr(self, name)
            if not math.isfinite(value):
                raise ValueError(f"{name} must be finite, got {value!r}")
        if self.ej < 0:
            raise ValueError(f"ej must be >= 0, got {self.ej}")
        if self.wp <= 0:
            raise ValueError(f"wp must be > 0, got {self.wp}")
        if self.z < 0:
            raise ValueError(f"z must be >= 0, got {self.z}")
        if int(self.n_modes) != self.n_modes or self.n_modes < 0:
            raise ValueError(f"n_modes must be a non-negative integer, got {self.n_modes}")
        object.__setattr__(self, "n_modes", int(self.n_modes))

    @property
    def delta(self) -> float:
        """Free spectral range hbar Delta / E_C (infinite for a bare junction)."""
        if self.n_modes == 0:
            return math.inf
        return math.pi * self.wp / (2 * self.n_modes)

    @property
    def site_capacitance(self) -> float:
        return 8.0 / math.pi * self.z / self.wp

    @property
    def inverse_inductance(self) -> float:
        return 2.0 / math.pi * self.z * self.wp

    def replace(self, **changes) -> "LineSpec":
        fields = {"ej": self.ej, "wp": self.wp, "n_modes": self.n_modes, "z": self.z}
        fields.update(changes)
        return LineSpec(**fields)


def n_modes_for_delta(wp: float, delta: float) -> int:
    """Nearest integer mode count for a requested free spectral range."""
    return max(1, int(round(math.pi * wp / (2 * delta))))


@dataclass(frozen=True)
class ModeDecomposition:
    """Photonic modes of a circuit and their coupling to the junction charge.

    ``omega`` and ``g`` exclude the zero mode; ``p_row0[0]`` is ``p00`` and
    ``p_row0[k]`` is the junction component of photonic mode k.  ``transform``
    is the full matrix P (zero mode in column 0) with ``P^T C P = I``.
    """

    omega: np.ndarray
    g: np.ndarray
    p00: float
    p_row0: np.ndarray
    transform: np.ndarray
    spec: LineSpec

    @property
    def n_modes(self) -> int:
        return self.omega.size


def build_matrices(spec: LineSpec) -> tuple[np.ndarray, np.ndarray]:
    """Dimensionless capacitance (diagonal) and inductance (tridiagonal) matrices."""
    n = spec.n_modes
    cap = np.diag(np.concatenate(([1.0], np.full(n, spec.site_capacitance))))
    ind = np.zeros((n + 1, n + 1))
    if n == 0:
        return cap, ind
    diag = np.full(n + 1, 2.0)
    diag[0] = diag[-1] = 1.0
    ind[np.diag_indices(n + 1)] = diag
    off = np.arange(n)
    ind[off, off + 1] = -1.0
    ind[off + 1, off] = -1.0
    ind *= spec.inverse_inductance
    return cap, ind


def decompose_modes(spec: LineSpec) -> ModeDecomposition:
    """Solve ``Gamma P = C P omega^2`` with ``P^T C P = I``.

    The single zero eigenvalue is the junction mode and is dropped from the
    photonic list.  Each column of P is sign-fixed so that ``P[0, k] >= 0``.
    With ``z == 0`` the chain has no inductive coupling at all; the zero mode
    is the bare junction and the photonic modes are those of the chain with
    its first node held fixed (the ``z -> 0`` limit), with zero coupling.
    """
    cap, ind = build_matrices(spec)
    n = spec.n_modes
    if n == 0:
        one = np.ones((1, 1))
        return ModeDecomposition(np.empty(0), np.empty(0), 1.0, np.ones(1), one, spec)
    if spec.z == 0:
        return _decoupled_modes(spec)

    cap_diag = np.diag(cap)
    inv_sqrt = 1.0 / np.sqrt(cap_diag)
    reduced = inv_sqrt[:, None] * ind * inv_sqrt[None, :]
    try:
        evals, evecs = scipy.linalg.eigh(reduced)
    except np.linalg.LinAlgError as exc:
        raise NotConverged(f"dense eigensolver failed: {exc}") from exc

    scale = np.max(np.abs(evals))
    zero = np.abs(evals) < KERNEL_RTOL * scale
    if zero.sum() != 1:
        raise MoreThanOneZeroMode(f"{int(zero.sum())} eigenvalues below kernel tolerance")
    order = np.concatenate((np.flatnonzero(zero), np.flatnonzero(~zero)))
    evals = evals[order]
    transform = inv_sqrt[:, None] * evecs[:, order]
    signs = np.where(transform[0] < 0, -1.0, 1.0)
    transform *= signs[None, :]

    omega = np.sqrt(evals[1:])
    p_row0 = transform[0].copy()
    g = 2.0 * np.sqrt(omega) * p_row0[1:]
    return ModeDecomposition(omega, g, float(p_row0[0]), p_row0, transform, spec)


def _decoupled_modes(spec: LineSpec) -> ModeDecomposition:
    n = spec.n_modes
    omega = spec.wp * np.sin(np.pi * (2 * np.arange(1, n + 1) - 1) / (2 * (2 * n + 1)))
    transform = np.eye(n + 1)
    p_row0 = transform[0].copy()
    return ModeDecomposition(omega, np.zeros(n), 1.0, p_row0, transform, spec)


def check_sum_rule(md: ModeDecomposition) -> float:
    """Residual of ``p00^2 + (1/4) sum_k g_k^2 / omega_k = 1``."""
    total = md.p00**2 + 0.25 * float(np.sum(md.g**2 / md.omega)) if md.n_modes else md.p00**2
    return abs(total - 1.0)


def p00_closed_form(spec: LineSpec) -> float:
    """Junction weight of the uniform zero mode, ``(1 + N_m c)^(-1/2)``."""
    return 1.0 / math.sqrt(1.0 + spec.n_modes * spec.site_capacitance)

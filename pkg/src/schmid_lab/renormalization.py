"""Closed-form renormalized junction energies and their finite-size flow."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .circuit_modes import LineSpec, ModeDecomposition, decompose_modes
from .errors import NoCrossing

DEFAULT_Z_GRID = np.geomspace(0.05, 2.0, 400)


@dataclass(frozen=True)
class RenormPoint:
    """Renormalized energies at one (z, N_m) point.

    ``ratio`` is ``(ej_tilde / ec_tilde) / (ej / 1)``, i.e. normalized by the
    bare ratio so that it tends to 1 as ``z -> 0``.
    """

    z: float
    n_modes: int
    delta: float
    ej_tilde: float
    ec_tilde: float
    ratio: float


@dataclass
class FlowResult:
    points: list[RenormPoint]
    crossings: dict[tuple[int, int], list[float]] = field(default_factory=dict)

    def curve(self, n_modes: int, attr: str = "ratio") -> tuple[np.ndarray, np.ndarray]:
        pts = [p for p in self.points if p.n_modes == n_modes]
        return np.array([p.z for p in pts]), np.array([getattr(p, attr) for p in pts])


@dataclass(frozen=True)
class SlopeFit:
    deltas: np.ndarray
    slopes: np.ndarray
    a: float
    b: float
    r2: float


def franck_condon_exponent(md: ModeDecomposition) -> float:
    """``sum_k g_k^2 / omega_k^2``; diverges as the line grows."""
    if md.n_modes == 0:
        return 0.0
    return float(np.sum(md.g**2 / md.omega**2))


def renorm_ej(md: ModeDecomposition, ej: float) -> float:
    return ej * math.exp(-0.5 * franck_condon_exponent(md))


def renorm_ec(md: ModeDecomposition) -> float:
    return md.p00**2


def renorm_ec_closed_form(spec: LineSpec) -> float:
    """``1 / (1 + N_m c)``, equivalently ``1 / (1 + 4 z / delta)``."""
    return 1.0 / (1.0 + spec.n_modes * spec.site_capacitance)


def renorm_point(spec: LineSpec) -> RenormPoint:
    md = decompose_modes(spec)
    exponent = franck_condon_exponent(md)
    ec = renorm_ec(md)
    return RenormPoint(
        z=spec.z,
        n_modes=spec.n_modes,
        delta=spec.delta,
        ej_tilde=spec.ej * math.exp(-0.5 * exponent),
        ec_tilde=ec,
        ratio=math.exp(-0.5 * exponent) / ec,
    )


def normalized_ratio(wp: float, n_modes: int, z: float) -> float:
    return renorm_point(LineSpec(ej=1.0, wp=wp, n_modes=n_modes, z=z)).ratio


def find_crossings(x: np.ndarray, y1: np.ndarray, y2: np.ndarray) -> list[float]:
    """Abscissae where two sampled curves cross, by linear interpolation."""
    diff = np.asarray(y1, float) - np.asarray(y2, float)
    out = []
    for i in range(diff.size - 1):
        d0, d1 = diff[i], diff[i + 1]
        if d0 == 0.0:
            out.append(float(x[i]))
        elif d0 * d1 < 0:
            out.append(float(x[i] - d0 * (x[i + 1] - x[i]) / (d1 - d0)))
    if diff.size and diff[-1] == 0.0:
        out.append(float(x[-1]))
    return out


def sweep_flow(wp: float, ej: float, z_grid=DEFAULT_Z_GRID, n_modes_list=(8, 16, 32, 64)) -> FlowResult:
    """Renormalized energies on a (z, N_m) grid plus the ratio-curve crossings
    between each adjacent pair of sizes."""
    z_grid = np.asarray(z_grid, float)
    sizes = list(n_modes_list)
    if sizes != sorted(sizes):
        raise ValueError("n_modes_list must be ascending")
    points = [renorm_point(LineSpec(ej, wp, n, float(z))) for n in sizes for z in z_grid]
    result = FlowResult(points)
    for small, large in zip(sizes, sizes[1:]):
        _, r_small = result.curve(small)
        _, r_large = result.curve(large)
        result.crossings[(small, large)] = find_crossings(z_grid, r_small, r_large)
    return result


def slope_at_critical(wp: float, ej: float, n_modes_list, step: float = 1e-4) -> SlopeFit:
    """Central-difference slope of the normalized ratio at ``z = 1`` per size and a
    least-squares fit ``slope = a ln(1/delta) + b``.

    The normalized ratio does not depend on ``ej``; the argument is kept so the
    call mirrors the other sweeps.
    """
    sizes = list(n_modes_list)
    if len(sizes) < 4:
        raise ValueError("need at least 4 sizes for the log fit")
    deltas, slopes = [], []
    for n in sizes:
        up = normalized_ratio(wp, n, 1.0 + step)
        down = normalized_ratio(wp, n, 1.0 - step)
        slopes.append((up - down) / (2 * step))
        deltas.append(LineSpec(ej, wp, n, 1.0).delta)
    deltas = np.array(deltas)
    slopes = np.array(slopes)
    x = np.log(1.0 / deltas)
    a, b = np.polyfit(x, slopes, 1)
    fitted = a * x + b
    ss_res = float(np.sum((slopes - fitted) ** 2))
    ss_tot = float(np.sum((slopes - slopes.mean()) ** 2))
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    return SlopeFit(deltas, slopes, float(a), float(b), r2)


def charge_crossings(wp: float, z_grid, n_modes: int) -> np.ndarray:
    """Impedance where each photon branch ``omega_k`` meets the first dressed
    charge state stacked on the previous branch, ``4 ec_tilde + omega_{k-1}``
    (``omega_0 = 0``), in the ``E_J -> 0`` limit.

    Returns one abscissa per mode (the first sign change on the grid), NaN for
    modes whose branches never meet.  Raises ``NoCrossing`` when no mode
    crosses at all.
    """
    z_grid = np.asarray(z_grid, float)
    omegas = np.empty((z_grid.size, n_modes))
    ec = np.empty(z_grid.size)
    for i, z in enumerate(z_grid):
        md = decompose_modes(LineSpec(0.0, wp, n_modes, float(z)))
        omegas[i] = md.omega
        ec[i] = renorm_ec(md)
    lower = np.zeros_like(omegas)
    lower[:, 1:] = omegas[:, :-1]
    out = np.full(n_modes, np.nan)
    for k in range(n_modes):
        hits = find_crossings(z_grid, omegas[:, k], 4.0 * ec + lower[:, k])
        if hits:
            out[k] = hits[0]
    if np.all(np.isnan(out)):
        raise NoCrossing(f"no photon branch crosses the charge branch on the z grid (N_m={n_modes})")
    return out

"""Exact diagonalization of a Josephson junction coupled to a multimode
transmission line.

Energies are in units of the bare charging energy E_C and hbar = 1.
"""

from .bare_junction import BlochBlock, solve_bloch
from .circuit_modes import LineSpec, ModeDecomposition, check_sum_rule, decompose_modes
from .eigensolver import EigResult, lowest_eigenpairs
from .errors import (
    CapacityOverflow,
    ConfigError,
    DimensionMismatch,
    GroundMissing,
    MoreThanOneZeroMode,
    NoCrossing,
    NotConverged,
    SchmidLabError,
    TruncationTooSmall,
)
from .fock_basis import CutoffBasis, generate, lookup
from .spectrum import DiagSettings, SparseBlock, assemble, band_sweep, convergence_study, solve_block

__version__ = "0.1.0"

__all__ = [
    "BlochBlock",
    "CapacityOverflow",
    "ConfigError",
    "CutoffBasis",
    "DiagSettings",
    "DimensionMismatch",
    "EigResult",
    "GroundMissing",
    "LineSpec",
    "ModeDecomposition",
    "MoreThanOneZeroMode",
    "NoCrossing",
    "NotConverged",
    "SchmidLabError",
    "SparseBlock",
    "TruncationTooSmall",
    "assemble",
    "band_sweep",
    "check_sum_rule",
    "convergence_study",
    "decompose_modes",
    "generate",
    "lookup",
    "lowest_eigenpairs",
    "solve_bloch",
    "solve_block",
    "__version__",
]

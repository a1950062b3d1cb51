"""Effective Schrodinger operator and the one-term splitting formula.

The double-well operator's low-lying spectrum is governed, after the
rescaling hbar = sqrt(h), by

    M_hbar = -hbar^2 (a''(0)/2) d^2/dx^2 + b(x, 0),

discretized pseudo-spectrally: the kinetic part is the exact Fourier
multiplier (a''(0)/2) eta^2 on the hbar-matched momentum lattice. Its
ground-state gap admits the classical one-term asymptotics
A hbar^(1/2) exp(-S/hbar), which this module also evaluates.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .errors import PrecisionWarning
from .model import Model, derived_constants
from .quantize import Grid, OperatorMatrix, make_grid, _symmetrize
from .spectra import lowest_eigenpairs

__all__ = [
    "EffectiveOperator", "schrodinger_matrix", "assemble_Mhbar",
    "gap_Mhbar", "classical_splitting_formula",
]

# a gap within this factor of the eigensolver residual is flagged
GAP_RESIDUAL_FACTOR = 100.0


@dataclass
class EffectiveOperator:
    hbar: float
    matrix: OperatorMatrix


def schrodinger_matrix(potential, g: Grid, hbar: float, a2: float) -> OperatorMatrix:
    """Dense matrix of -hbar^2 (a2/2) d^2 + potential on the grid window.

    The grid's own momentum lattice must already be matched to hbar
    (g.h == hbar); use assemble_Mhbar for automatic rebuilding.
    """
    eta = g.eta_fft
    from scipy.linalg import circulant
    M = circulant(np.fft.ifft(0.5 * a2 * eta * eta)).astype(np.complex128)
    M[np.diag_indices_from(M)] += np.asarray(potential(g.x_nodes), dtype=float)
    return _symmetrize(M, g)


def assemble_Mhbar(m: Model, g: Grid, hbar: float) -> EffectiveOperator:
    """Effective operator at hbar, rebuilding the momentum lattice if needed."""
    if abs(g.h - hbar) > 1e-15:
        g = make_grid(g.length, g.n_points, hbar)
    consts = derived_constants(m)
    return EffectiveOperator(hbar=float(hbar),
                             matrix=schrodinger_matrix(m.potential, g, hbar, consts.a2))


def gap_Mhbar(m: Model, g: Grid, hbar: float) -> float:
    """Ground-state gap lambda_2 - lambda_1 of the effective operator."""
    eff = assemble_Mhbar(m, g, hbar)
    pairs = lowest_eigenpairs(eff.matrix, 2)
    gap = pairs[1].value - pairs[0].value
    floor = GAP_RESIDUAL_FACTOR * max(p.residual for p in pairs)
    if gap < floor:
        warnings.warn(
            f"effective gap {gap:.3e} is within {GAP_RESIDUAL_FACTOR:.0f}x of "
            f"the eigensolver residual {floor/GAP_RESIDUAL_FACTOR:.3e}",
            PrecisionWarning)
    return float(gap)


def classical_splitting_formula(m: Model, hbar: float) -> float:
    """One-term gap prediction A sqrt(hbar) exp(-S/hbar)."""
    consts = derived_constants(m)
    return float(consts.A * np.sqrt(hbar) * np.exp(-consts.S / hbar))

"""Trapping potentials sampled onto grids.

Built-ins are the anisotropic quartic ring trap ("Mexican hat")

    V(x) = A * (sum_i (C_i x_i)^2 - B)^2

and the isotropic harmonic trap V(x) = |x|^2 / 2.  A tabulated variant wraps
an arbitrary nonnegative field on a specific grid.  Every variant carries an
optional additive constant ``shift`` >= 0; shifting the potential changes no
constrained minimizer but bounds it away from zero, which several convexity
properties require.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from numpy.typing import NDArray

from .grids import Grid, as_field


@dataclass(frozen=True)
class MexicanHat:
    """Quartic ring trap A*(sum (C_i x_i)^2 - B)^2."""

    amplitude: float = 0.1
    offset: float = 16.0
    coeffs: tuple[float, ...] = (1.0,)
    shift: float = 0.0

    def __post_init__(self):
        if not (self.amplitude > 0):
            raise ValueError(f"amplitude must be positive, got {self.amplitude}")
        if any(c == 0 for c in self.coeffs):
            raise ValueError("all axis coefficients must be nonzero")
        _check_shift(self.shift)


@dataclass(frozen=True)
class Harmonic:
    """Isotropic harmonic trap |x|^2 / 2."""

    shift: float = 0.0

    def __post_init__(self):
        _check_shift(self.shift)


@dataclass(frozen=True)
class Tabulated:
    """Potential given by node values on a specific grid."""

    grid: Grid
    values: tuple[float, ...]
    shift: float = 0.0

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=np.float64)
        if vals.size != self.grid.n_points:
            raise ValueError(
                f"tabulated potential has {vals.size} values, grid has {self.grid.n_points} nodes"
            )
        if not np.all(np.isfinite(vals)):
            raise ValueError("tabulated potential contains non-finite values")
        _check_shift(self.shift)


PotentialSpec = MexicanHat | Harmonic | Tabulated


def _check_shift(shift: float) -> None:
    if not (shift >= 0) or not np.isfinite(shift):
        raise ValueError(f"shift must be a nonnegative finite number, got {shift}")


def eval_mexican_hat(spec: MexicanHat, point) -> float:
    """Evaluate the ring trap at one point (without the shift)."""
    x = np.asarray(point, dtype=np.float64).ravel()
    if x.size != len(spec.coeffs):
        raise ValueError(f"point has {x.size} coordinates, potential has {len(spec.coeffs)}")
    r2 = float(np.sum((np.asarray(spec.coeffs) * x) ** 2))
    return spec.amplitude * (r2 - spec.offset) ** 2


def eval_harmonic(point) -> float:
    """Evaluate |x|^2 / 2 at one point."""
    x = np.asarray(point, dtype=np.float64).ravel()
    return 0.5 * float(np.dot(x, x))


def sample_potential(grid: Grid, spec: PotentialSpec) -> NDArray[np.float64]:
    """Sample a potential onto every grid node, returned as a flat field."""
    if isinstance(spec, MexicanHat):
        if len(spec.coeffs) != grid.dim:
            raise ValueError(
                f"potential has {len(spec.coeffs)} axis coefficients, grid dim is {grid.dim}"
            )
        mesh = grid.meshgrid()
        r2 = sum((c * xi) ** 2 for c, xi in zip(spec.coeffs, mesh))
        v = spec.amplitude * (r2 - spec.offset) ** 2
        return v.ravel() + spec.shift
    if isinstance(spec, Harmonic):
        mesh = grid.meshgrid()
        v = 0.5 * sum(xi**2 for xi in mesh)
        return v.ravel() + spec.shift
    if isinstance(spec, Tabulated):
        if spec.grid != grid:
            raise ValueError("tabulated potential was sampled on a different grid")
        return as_field(grid, spec.values) + spec.shift
    raise TypeError(f"unknown potential spec {type(spec).__name__}")

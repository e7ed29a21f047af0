"""Discrete energy functional, constraint, chemical potential, and variations.

For a field u on a grid with rectangle-rule weight q the discrete energy is

    E(u) = q * [ 1/2 sum_i |W_i u|^2 + sum V u^2 + (g/2) sum u^4 ]

minimized subject to beta(u) = q * sum u^2 = n_particles.  The stationary
(Euler-Lagrange) equation of this discrete problem is

    1/2 W^T W u + V u + g u^3 = mu * u

with the multiplier mu recovered by pairing the equation with u:
mu = q * [ 1/2 sum_i |W_i u|^2 + sum V u^2 + g sum u^4 ] / n_particles.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from numpy.typing import NDArray

from .grids import Grid, apply_wtw, as_field, grad_dot, inner_l2

BETA_WARN_REL = 1e-6


class ConstraintMismatchWarning(UserWarning):
    """The normalization constraint does not hold where a formula assumes it."""


@dataclass(frozen=True, eq=False)
class Problem:
    """Grid, sampled potential, coupling constant, and particle number."""

    grid: Grid
    potential: NDArray[np.float64]
    coupling: float
    n_particles: float

    def __post_init__(self):
        v = as_field(self.grid, self.potential)
        if np.any(v < 0):
            raise ValueError("potential must be nonnegative (apply a shift if needed)")
        object.__setattr__(self, "potential", v)
        if not (self.coupling >= 0) or not np.isfinite(self.coupling):
            raise ValueError(f"coupling must be >= 0, got {self.coupling}")
        if not (self.n_particles > 0) or not np.isfinite(self.n_particles):
            raise ValueError(f"n_particles must be > 0, got {self.n_particles}")


def energy(problem: Problem, u: NDArray[np.float64]) -> float:
    grid = problem.grid
    kinetic = 0.5 * grad_dot(grid, u, u)
    v_term = float(np.sum(problem.potential * u * u))
    quartic = 0.5 * problem.coupling * float(np.sum(u**4))
    return grid.quad_weight * (kinetic + v_term + quartic)


def beta(problem: Problem, u: NDArray[np.float64]) -> float:
    """Squared weighted L2 norm, the quantity constrained to n_particles."""
    return inner_l2(problem.grid, u, u)


def normalized(problem: Problem, u: NDArray[np.float64]) -> NDArray[np.float64]:
    """Rescale so that beta(u) equals n_particles exactly."""
    b = beta(problem, u)
    if b <= 0.0:
        raise ValueError("cannot normalize a zero field")
    return u * np.sqrt(problem.n_particles / b)


def chemical_potential(problem: Problem, u: NDArray[np.float64]) -> float:
    """Multiplier estimate from the stationary equation paired with u.

    Assumes beta(u) = n_particles; warns (never raises) when the constraint is
    off by more than ``BETA_WARN_REL`` relative.
    """
    grid = problem.grid
    b = beta(problem, u)
    rel = abs(b - problem.n_particles) / problem.n_particles
    if rel > BETA_WARN_REL:
        warnings.warn(
            f"chemical potential evaluated off the constraint: |beta-N|/N = {rel:.3e}",
            ConstraintMismatchWarning,
            stacklevel=2,
        )
    kinetic = 0.5 * grad_dot(grid, u, u)
    v_term = float(np.sum(problem.potential * u * u))
    quartic = problem.coupling * float(np.sum(u**4))
    return grid.quad_weight * (kinetic + v_term + quartic) / problem.n_particles


def el_residual(problem: Problem, u: NDArray[np.float64], mu: float) -> NDArray[np.float64]:
    """Pointwise residual of the stationary equation at (u, mu)."""
    return (
        0.5 * apply_wtw(problem.grid, u)
        + problem.potential * u
        + problem.coupling * u**3
        - mu * u
    )


def first_variation(problem: Problem, u: NDArray[np.float64], h: NDArray[np.float64]) -> float:
    """Directional derivative of the energy at u along h."""
    grid = problem.grid
    return grid.quad_weight * (
        grad_dot(grid, u, h)
        + 2.0 * float(np.sum(problem.potential * u * h))
        + 2.0 * problem.coupling * float(np.sum(u**3 * h))
    )


def second_variation(problem: Problem, u: NDArray[np.float64], h: NDArray[np.float64]) -> float:
    """Quadratic form of the energy Hessian at u applied to (h, h)."""
    grid = problem.grid
    g = problem.coupling
    uh = u * h
    return grid.quad_weight * (
        grad_dot(grid, h, h)
        + 2.0 * float(np.sum(problem.potential * h * h))
        + 2.0 * g * float(np.sum(u * u * h * h))
        + 4.0 * g * float(np.sum(uh * uh))
    )

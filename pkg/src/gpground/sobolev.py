"""Riesz map M = (I + W^T W)^(-1), Sobolev gradient, and constraint projection.

M maps the weighted L2 representer of a functional to its weighted H1
representer: <h, f>_L2 = <h, M f>_H1 for all h (the quadrature weight cancels,
so M itself is the plain algebraic inverse).  The energy gradient in the H1
metric is

    grad_H E(u) = u + M(2 V u + 2 g u^3 - u)

and the projection onto the tangent space of the normalization constraint is

    P_u h = h - (<u, h>_L2 / <u, M u>_L2) * M u.

M is applied matrix-free: diagonally preconditioned conjugate gradients with a
relative-residual stop, plus a direct tridiagonal path in 1D (the two must
agree; see the tests).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.typing import NDArray
from scipy.linalg import solveh_banded
from scipy.sparse.linalg import LinearOperator, cg

from .energy import Problem
from .grids import Grid, apply_wtw, inner_l2, wtw_diagonal

DENOM_GUARD = 1e-300


class EllipticSolveError(RuntimeError):
    """The iterative solve for M did not reach the requested residual."""

    def __init__(self, message: str, achieved_residual: float):
        super().__init__(message)
        self.achieved_residual = achieved_residual


@dataclass(frozen=True)
class EllipticSolveConfig:
    """Stopping parameters for the M solve."""

    rel_residual_tol: float = 1e-10
    max_iterations: int | None = None  # None: 10 * n_points

    def __post_init__(self):
        if not (0.0 < self.rel_residual_tol <= 1e-4):
            raise ValueError(f"rel_residual_tol must be in (0, 1e-4], got {self.rel_residual_tol}")
        if self.max_iterations is not None and self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")


def apply_m(
    grid: Grid,
    f: NDArray[np.float64],
    config: EllipticSolveConfig | None = None,
    x0: NDArray[np.float64] | None = None,
    method: str = "auto",
) -> NDArray[np.float64]:
    """Solve (I + W^T W) v = f to the configured relative residual.

    ``method`` is "auto" (direct in 1D, conjugate gradients otherwise),
    "direct" (1D only), or "cg".  ``x0`` warm-starts the iteration.
    """
    cfg = config or EllipticSolveConfig()
    if f.size != grid.n_points:
        raise ValueError(f"field has {f.size} values, grid has {grid.n_points} nodes")
    if method == "auto":
        method = "direct" if grid.dim == 1 else "cg"
    if method == "direct":
        if grid.dim != 1:
            raise ValueError("direct solve is only available in 1D")
        return _solve_direct_1d(grid, f)
    if method != "cg":
        raise ValueError(f"unknown method {method!r}")

    n = grid.n_points
    op = LinearOperator((n, n), matvec=lambda v: v + apply_wtw(grid, v), dtype=np.float64)
    inv_diag = 1.0 / (1.0 + wtw_diagonal(grid))
    precond = LinearOperator((n, n), matvec=lambda v: inv_diag * v, dtype=np.float64)
    maxiter = cfg.max_iterations if cfg.max_iterations is not None else 10 * n
    v, info = cg(op, f, x0=x0, rtol=cfg.rel_residual_tol, atol=0.0, maxiter=maxiter, M=precond)
    if info != 0:
        norm_f = float(np.linalg.norm(f))
        achieved = float(np.linalg.norm(f - (v + apply_wtw(grid, v)))) / max(norm_f, DENOM_GUARD)
        raise EllipticSolveError(
            f"M solve stalled after {maxiter} iterations "
            f"(relative residual {achieved:.3e}, requested {cfg.rel_residual_tol:.1e})",
            achieved,
        )
    return v


def _solve_direct_1d(grid: Grid, f: NDArray[np.float64]) -> NDArray[np.float64]:
    n = grid.counts[0]
    inv_dx2 = 1.0 / grid.spacings[0] ** 2
    bands = np.zeros((2, n))
    bands[1] = 1.0 + wtw_diagonal(grid)
    bands[0, 1:] = -inv_dx2
    return solveh_banded(bands, f, lower=False)


def sobolev_gradient(
    problem: Problem,
    u: NDArray[np.float64],
    config: EllipticSolveConfig | None = None,
    x0: NDArray[np.float64] | None = None,
) -> NDArray[np.float64]:
    """H1-metric energy gradient u + M(2 V u + 2 g u^3 - u)."""
    f = 2.0 * problem.potential * u + 2.0 * problem.coupling * u**3 - u
    return u + apply_m(problem.grid, f, config, x0=x0)


@dataclass(frozen=True, eq=False)
class ProjectionCache:
    """One iterate's projection data: u, M u, and <u, M u>_L2."""

    u: NDArray[np.float64]
    mu_field: NDArray[np.float64]
    denom: float


def build_projection_cache(
    grid: Grid,
    u: NDArray[np.float64],
    config: EllipticSolveConfig | None = None,
    x0: NDArray[np.float64] | None = None,
) -> ProjectionCache:
    """Compute and cache M u for repeated projections at the same u.

    Raises ValueError when u is (numerically) zero: the projection is
    undefined there because <u, M u>_L2 = ||M u||_H^2 vanishes only at u = 0.
    """
    mu_field = apply_m(grid, u, config, x0=x0)
    denom = inner_l2(grid, u, mu_field)
    if not (denom > DENOM_GUARD):
        raise ValueError("projection undefined for a zero field")
    return ProjectionCache(u=u, mu_field=mu_field, denom=denom)


def project(grid: Grid, cache: ProjectionCache, h: NDArray[np.float64]) -> NDArray[np.float64]:
    """Project h onto the tangent space of the constraint at cache.u."""
    coeff = inner_l2(grid, cache.u, h) / cache.denom
    return h - coeff * cache.mu_field

"""Newton refinement of the stationary equation with a bordered constraint row.

Unknowns are the field u and the multiplier mu.  The nonlinear system is

    F(u, mu) = ( 1/2 W^T W u + V u + g u^3 - mu u,  beta(u) - n_particles )

and its Jacobian, applied matrix-free, is

    J (h, nu) = ( 1/2 W^T W h + (V + 3 g u^2 - mu) h - nu u,  2 <u, h>_L2 ).

The bordered linear systems are solved iteratively on an equivalent symmetric
indefinite form (MINRES); in 1D a direct banded factorization with block
elimination of the border is used instead.  Full Newton steps are damped by
residual halving; residual growth on three consecutive iterations or
iteration exhaustion raises with the residual trace attached.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.typing import NDArray
from scipy.linalg import solve_banded
from scipy.sparse.linalg import LinearOperator, minres

from .energy import Problem, beta, chemical_potential, el_residual
from .grids import apply_wtw, inner_l2, wtw_diagonal

MAX_DAMPING_HALVINGS = 10
MAX_RESIDUAL_GROWTHS = 3


class NewtonSolveError(RuntimeError):
    """Newton refinement diverged or ran out of iterations."""

    def __init__(self, message: str, residual_trace: list[float]):
        super().__init__(message)
        self.residual_trace = residual_trace


@dataclass(frozen=True)
class NewtonConfig:
    residual_tol: float = 1e-8  # max-norm, both residual components
    max_iterations: int = 100
    linear_rel_tol: float = 1e-10

    def __post_init__(self):
        if not (self.residual_tol > 0):
            raise ValueError("residual_tol must be positive")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")
        if not (0 < self.linear_rel_tol <= 1e-4):
            raise ValueError("linear_rel_tol must be in (0, 1e-4]")


@dataclass(frozen=True)
class NewtonResult:
    u: NDArray[np.float64]
    mu: float
    iterations: int
    residual_norm: float


def newton_residual(problem: Problem, u: NDArray[np.float64], mu: float) -> tuple[NDArray[np.float64], float]:
    """Stationary-equation residual field and constraint residual."""
    return el_residual(problem, u, mu), beta(problem, u) - problem.n_particles


def apply_jacobian(
    problem: Problem,
    u: NDArray[np.float64],
    mu: float,
    h: NDArray[np.float64],
    nu: float,
) -> tuple[NDArray[np.float64], float]:
    """Directional derivative of :func:`newton_residual` at (u, mu) along (h, nu)."""
    top = (
        0.5 * apply_wtw(problem.grid, h)
        + (problem.potential + 3.0 * problem.coupling * u * u - mu) * h
        - nu * u
    )
    return top, 2.0 * inner_l2(problem.grid, u, h)


def _residual_norm(r_field: NDArray[np.float64], r_beta: float) -> float:
    return max(float(np.max(np.abs(r_field))), abs(r_beta))


def _merit(r_field: NDArray[np.float64], r_beta: float) -> float:
    # damping decisions use the 2-norm: the max-norm is too twitchy to steer by
    return float(np.sqrt(np.dot(r_field, r_field) + r_beta * r_beta))


def _solve_bordered_1d(problem, u, mu, b_field, b_beta):
    """Direct banded solve with block elimination of the border column."""
    grid = problem.grid
    n = grid.counts[0]
    diag = 0.5 * wtw_diagonal(grid) + problem.potential + 3.0 * problem.coupling * u * u - mu
    off = np.full(n - 1, -0.5 / grid.spacings[0] ** 2)
    bands = np.zeros((3, n))
    bands[0, 1:] = off
    bands[1] = diag
    bands[2, :-1] = off
    sol = solve_banded((1, 1), bands, np.column_stack([b_field, u]))
    a_inv_b, a_inv_u = sol[:, 0], sol[:, 1]
    r = 2.0 * grid.quad_weight * u  # constraint derivative row
    denom = float(r @ a_inv_u)
    if denom == 0.0 or not np.isfinite(denom):
        raise np.linalg.LinAlgError("singular bordered system")
    dmu = (float(r @ a_inv_b) - b_beta) / denom
    h = a_inv_b + dmu * a_inv_u
    return h, dmu


def _solve_bordered_minres(problem, u, mu, b_field, b_beta, linear_rel_tol):
    """MINRES on the symmetrized bordered operator.

    With the multiplier rescaled as nu = -2 q nu_t (q the quadrature weight)
    the bordered matrix becomes symmetric indefinite:
        [ A       2 q u ] [ h    ]   [ b_field ]
        [ (2 q u)^T   0 ] [ nu_t ] = [ b_beta  ]
    """
    grid = problem.grid
    n = grid.n_points
    q = grid.quad_weight
    diag = 0.5 * wtw_diagonal(grid) + problem.potential + 3.0 * problem.coupling * u * u - mu

    def matvec(z):
        h = z[:n]
        nu_t = z[n]
        top, _ = apply_jacobian(problem, u, mu, h, 0.0)
        top += 2.0 * q * nu_t * u
        bottom = 2.0 * q * float(np.dot(u, h))
        return np.concatenate([top, [bottom]])

    op = LinearOperator((n + 1, n + 1), matvec=matvec, dtype=np.float64)
    precond_diag = np.concatenate([np.maximum(np.abs(diag), 1e-8), [1.0]])
    precond = LinearOperator(
        (n + 1, n + 1), matvec=lambda z: z / precond_diag, dtype=np.float64
    )
    rhs = np.concatenate([b_field, [b_beta]])
    z, info = minres(op, rhs, rtol=linear_rel_tol, maxiter=max(1000, 20 * n), M=precond)
    if info != 0:
        raise np.linalg.LinAlgError(f"bordered MINRES did not converge (info={info})")
    return z[:n], -2.0 * q * float(z[n])


def newton_solve(problem: Problem, u0: NDArray[np.float64], config: NewtonConfig | None = None) -> NewtonResult:
    """Refine a descent output to the configured residual tolerance.

    The starting multiplier is the chemical potential of ``u0``.  On success
    the returned field carries a nonnegative value at its largest-magnitude
    node (the ground state is defined up to a global sign).
    """
    cfg = config or NewtonConfig()
    u = np.array(u0, dtype=np.float64)
    mu = chemical_potential(problem, u)
    trace: list[float] = []
    growths = 0
    for iteration in range(cfg.max_iterations + 1):
        r_field, r_beta = newton_residual(problem, u, mu)
        res = _residual_norm(r_field, r_beta)
        trace.append(res)
        if res <= cfg.residual_tol:
            return NewtonResult(
                u=_sign_normalized(u), mu=mu, iterations=iteration, residual_norm=res
            )
        if iteration == cfg.max_iterations:
            break
        try:
            if problem.grid.dim == 1:
                du, dmu = _solve_bordered_1d(problem, u, mu, -r_field, -r_beta)
            else:
                du, dmu = _solve_bordered_minres(
                    problem, u, mu, -r_field, -r_beta, cfg.linear_rel_tol
                )
        except np.linalg.LinAlgError as exc:
            raise NewtonSolveError(f"linear solve failed: {exc}", trace) from exc

        merit = _merit(r_field, r_beta)
        step = 1.0
        best = None  # (merit, u, mu)
        accepted = False
        for _ in range(MAX_DAMPING_HALVINGS + 1):
            u_try = u + step * du
            mu_try = mu + step * dmu
            merit_try = _merit(*newton_residual(problem, u_try, mu_try))
            if best is None or merit_try < best[0]:
                best = (merit_try, u_try, mu_try)
            if merit_try < merit:
                accepted = True
                break
            step *= 0.5
        _, u, mu = best
        if accepted:
            growths = 0
        else:
            growths += 1
            if growths >= MAX_RESIDUAL_GROWTHS:
                raise NewtonSolveError(
                    f"residual grew on {growths} consecutive iterations "
                    f"(last {trace[-1]:.3e})",
                    trace,
                )
    raise NewtonSolveError(
        f"no convergence within {cfg.max_iterations} iterations "
        f"(residual {trace[-1]:.3e}, tolerance {cfg.residual_tol:.1e})",
        trace,
    )


def _sign_normalized(u: NDArray[np.float64]) -> NDArray[np.float64]:
    peak = np.argmax(np.abs(u))
    return -u if u[peak] < 0 else u

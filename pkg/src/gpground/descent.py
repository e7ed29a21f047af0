"""Projected Sobolev-gradient descent with exact polynomial line search.

Each step projects the H1-metric energy gradient onto the tangent space of
the normalization constraint, minimizes the quartic polynomial
p(s) = E(u - s*d) in closed form, renormalizes the stepped field back onto
the constraint, and guards against the rare energy increase the
renormalization can introduce by halving the step.  Iteration stops when the
relative energy change drops below the configured tolerance.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from numpy.typing import NDArray

from .energy import Problem, beta, energy, normalized
from .grids import Grid, grad_dot, norm_h1
from .sobolev import EllipticSolveConfig, build_projection_cache, project, sobolev_gradient

ENERGY_INCREASE_SLACK = 1e-12
MAX_STEP_HALVINGS = 30
TINY_DIRECTION_H1 = 1e-14


class DescentStagnationError(RuntimeError):
    """No energy-decreasing step was found after exhausting all halvings."""


@dataclass(frozen=True)
class DescentConfig:
    """Stopping and stepping parameters for the descent stage.

    ``rel_energy_tol = None`` selects the dimension defaults: 1e-4 in 1D and
    3D, 1e-3 in 2D.  ``seed`` feeds the PCG64 generator used by
    :func:`init_random`.
    """

    rel_energy_tol: float | None = None
    max_iterations: int = 100_000
    seed: int = 0
    step_fallback: float = 1e-3
    elliptic: EllipticSolveConfig = field(default_factory=EllipticSolveConfig)

    def __post_init__(self):
        if self.rel_energy_tol is not None and not (self.rel_energy_tol > 0):
            raise ValueError(f"rel_energy_tol must be positive, got {self.rel_energy_tol}")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")
        if not (self.step_fallback > 0):
            raise ValueError("step_fallback must be positive")

    def resolved_tol(self, dim: int) -> float:
        if self.rel_energy_tol is not None:
            return self.rel_energy_tol
        return 1e-3 if dim == 2 else 1e-4


@dataclass
class DescentState:
    """Mutable state evolved by :func:`descent_step`."""

    u: NDArray[np.float64]
    energy: float
    iterations: int = 0
    seed: int | None = None
    energy_trace: list[float] = field(default_factory=list)
    beta_residual_trace: list[float] = field(default_factory=list)
    # warm starts for the two elliptic solves of the next step
    m_u_guess: NDArray[np.float64] | None = None
    m_f_guess: NDArray[np.float64] | None = None


@dataclass(frozen=True)
class DescentResult:
    u: NDArray[np.float64]
    iterations: int
    energy_trace: NDArray[np.float64]
    beta_residual_trace: NDArray[np.float64]
    terminated_by: str  # "tolerance" | "max_iterations"


def init_random(grid: Grid, n_particles: float, seed: int) -> NDArray[np.float64]:
    """Seeded rough random field: PCG64 uniform [0, 1) at interior nodes,
    zero on the outermost layer of every axis, scaled so beta = n_particles.

    Identical seeds reproduce the field bitwise.
    """
    if not (n_particles > 0):
        raise ValueError("n_particles must be positive")
    boundary = grid.boundary_mask()
    u = _draw(grid, seed, boundary)
    if not u.any():
        u = _draw(grid, seed + 1, boundary)  # one reseed, then give up
        if not u.any():
            raise RuntimeError("random initialization produced a zero field twice")
    norm_sq = grid.quad_weight * float(np.dot(u, u))
    return u * np.sqrt(n_particles / norm_sq)


def _draw(grid: Grid, seed: int, boundary: NDArray[np.bool_]) -> NDArray[np.float64]:
    rng = np.random.Generator(np.random.PCG64(seed))
    u = rng.random(grid.n_points)
    u[boundary] = 0.0
    return u


def line_search(problem: Problem, u: NDArray[np.float64], d: NDArray[np.float64],
                fallback: float = 1e-3) -> float:
    """Positive step minimizing the quartic p(s) = E(u - s*d).

    p is assembled in closed form from five weighted sums; the minimizer is
    the positive real root of p' with the smallest p value.  Degenerate
    directions and rootless cases return ``fallback``.
    """
    grid = problem.grid
    if norm_h1(grid, d) < TINY_DIRECTION_H1:
        return fallback
    q = grid.quad_weight
    g = problem.coupling
    V = problem.potential
    c1 = -q * (grad_dot(grid, u, d) + 2.0 * float(np.sum(V * u * d))
               + 2.0 * g * float(np.sum(u**3 * d)))
    c2 = q * (0.5 * grad_dot(grid, d, d) + float(np.sum(V * d * d))
              + 3.0 * g * float(np.sum(u * u * d * d)))
    c3 = -2.0 * g * q * float(np.sum(u * d**3))
    c4 = 0.5 * g * q * float(np.sum(d**4))

    def p(s: float) -> float:
        return (((c4 * s + c3) * s + c2) * s + c1) * s

    if c4 <= 0.0:  # g = 0 (or degenerate): p is a parabola
        if c2 > 0.0 and c1 < 0.0:
            return -c1 / (2.0 * c2)
        return fallback
    roots = np.roots([4.0 * c4, 3.0 * c3, 2.0 * c2, c1])
    candidates = [float(r.real) for r in roots
                  if abs(r.imag) <= 1e-9 * (1.0 + abs(r.real)) and r.real > 0.0]
    if not candidates:
        return fallback
    return min(candidates, key=p)


def descent_step(problem: Problem, state: DescentState, config: DescentConfig) -> DescentState:
    """One projected-gradient step; mutates and returns ``state``.

    Raises :class:`DescentStagnationError` when 30 halvings find no
    non-increasing step.
    """
    grid = problem.grid
    cache = build_projection_cache(grid, state.u, config.elliptic, x0=state.m_u_guess)
    grad = sobolev_gradient(problem, state.u, config.elliptic, x0=state.m_f_guess)
    d = project(grid, cache, grad)
    s = line_search(problem, state.u, d, fallback=config.step_fallback)

    e_old = state.energy
    u_new = None
    e_new = None
    for _ in range(MAX_STEP_HALVINGS + 1):
        candidate = normalized(problem, state.u - s * d)
        e_candidate = energy(problem, candidate)
        if e_candidate <= e_old * (1.0 + ENERGY_INCREASE_SLACK):
            u_new, e_new = candidate, e_candidate
            break
        s *= 0.5
    if u_new is None:
        raise DescentStagnationError(
            f"descent stagnated at iteration {state.iterations}: "
            f"energy {e_old:.12e}, direction H1 norm {norm_h1(grid, d):.3e}, "
            f"final trial step {s:.3e}"
        )

    state.m_u_guess = cache.mu_field
    state.m_f_guess = grad - state.u
    state.u = u_new
    state.energy = e_new
    state.iterations += 1
    state.energy_trace.append(e_new)
    state.beta_residual_trace.append(
        abs(beta(problem, u_new) - problem.n_particles) / problem.n_particles
    )
    return state


def start_state(problem: Problem, u0: NDArray[np.float64], seed: int | None = None) -> DescentState:
    u = normalized(problem, u0)
    e0 = energy(problem, u)
    return DescentState(u=u, energy=e0, seed=seed, energy_trace=[e0], beta_residual_trace=[0.0])


def run_descent(
    problem: Problem,
    config: DescentConfig,
    u0: NDArray[np.float64] | None = None,
) -> DescentResult:
    """Iterate :func:`descent_step` until the relative energy change per step
    falls below the tolerance, or max_iterations is reached (flagged, not
    fatal).  ``u0`` overrides the seeded random initialization."""
    if u0 is None:
        u0 = init_random(problem.grid, problem.n_particles, config.seed)
    state = start_state(problem, u0, seed=config.seed)
    tol = config.resolved_tol(problem.grid.dim)
    terminated_by = "max_iterations"
    for _ in range(config.max_iterations):
        e_prev = state.energy
        descent_step(problem, state, config)
        rel_change = abs(state.energy - e_prev) / abs(e_prev) if e_prev != 0.0 else 0.0
        if rel_change < tol:
            terminated_by = "tolerance"
            break
    return DescentResult(
        u=state.u,
        iterations=state.iterations,
        energy_trace=np.asarray(state.energy_trace),
        beta_residual_trace=np.asarray(state.beta_residual_trace),
        terminated_by=terminated_by,
    )

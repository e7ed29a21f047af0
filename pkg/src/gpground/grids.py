"""Tensor-product grids, discrete gradient operators, and weighted inner products.

The domain is the box [-L_i, L_i) per axis, sampled at N_i uniformly spaced
nodes x_k = 2*L_i*(-1/2 + k/N_i) for k = 0..N_i-1 (the right endpoint +L_i is
not a node).  Fields are real-valued node samples stored as flat float64
arrays in row-major (C) order, last axis fastest.

The discrete gradient W evaluates all d components at cell centers: component
i is the forward difference along axis i divided by the spacing, averaged
pairwise along every other axis onto the center of each grid cell.  Each
component therefore lives on the cell lattice of shape (N_0-1, ..., N_{d-1}-1).
W^T is the plain (unweighted) transpose, and W^T W is the associated discrete
negative Laplacian with natural (no explicit Dirichlet row) boundaries.

All discrete integrals use the rectangle rule with weight prod(spacings).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np
from numpy.typing import NDArray


@dataclass(frozen=True)
class Grid:
    """Uniform tensor-product grid on [-L_i, L_i) per axis.

    Attributes:
        half_lengths: per-axis half length L_i > 0
        counts: per-axis node count N_i >= 4
    """

    half_lengths: tuple[float, ...]
    counts: tuple[int, ...]

    @property
    def dim(self) -> int:
        return len(self.counts)

    @property
    def shape(self) -> tuple[int, ...]:
        return self.counts

    @cached_property
    def spacings(self) -> tuple[float, ...]:
        return tuple(2.0 * L / n for L, n in zip(self.half_lengths, self.counts))

    @cached_property
    def quad_weight(self) -> float:
        return float(np.prod(self.spacings))

    @property
    def n_points(self) -> int:
        return int(np.prod(self.counts))

    @property
    def cell_shape(self) -> tuple[int, ...]:
        """Shape of the cell lattice carrying gradient components."""
        return tuple(n - 1 for n in self.counts)

    @property
    def n_cells(self) -> int:
        return int(np.prod(self.cell_shape))

    def axis_coordinates(self, axis: int) -> NDArray[np.float64]:
        """Node coordinates along one axis: x_k = -L + k*spacing."""
        L = self.half_lengths[axis]
        n = self.counts[axis]
        return -L + self.spacings[axis] * np.arange(n)

    def meshgrid(self) -> tuple[NDArray[np.float64], ...]:
        """Full node coordinate arrays of shape ``self.shape``, one per axis."""
        axes = [self.axis_coordinates(i) for i in range(self.dim)]
        return tuple(np.meshgrid(*axes, indexing="ij"))

    def reshape(self, u: NDArray[np.float64]) -> NDArray[np.float64]:
        """View a flat field as an nd array (no copy)."""
        return u.reshape(self.shape)

    def flat_index(self, multi_index: tuple[int, ...]) -> int:
        """Row-major flat index of a node."""
        return int(np.ravel_multi_index(multi_index, self.shape))

    def multi_index(self, flat_index: int) -> tuple[int, ...]:
        """Inverse of :meth:`flat_index`."""
        idx = np.unravel_index(flat_index, self.shape)
        return tuple(int(i) for i in idx)

    def boundary_mask(self) -> NDArray[np.bool_]:
        """Flat mask of nodes on the outermost layer of any axis."""
        mask = np.zeros(self.shape, dtype=bool)
        for ax in range(self.dim):
            sl = [slice(None)] * self.dim
            sl[ax] = 0
            mask[tuple(sl)] = True
            sl[ax] = -1
            mask[tuple(sl)] = True
        return mask.ravel()


def build_grid(dim: int, half_lengths, counts) -> Grid:
    """Validate parameters and construct a :class:`Grid`.

    Scalars are broadcast to every axis.  Raises ValueError for dim outside
    1..3, nonpositive half lengths, or counts below 4.
    """
    if dim not in (1, 2, 3):
        raise ValueError(f"dim must be 1, 2 or 3, got {dim}")
    Ls = _per_axis(half_lengths, dim, "half_lengths")
    Ns = _per_axis(counts, dim, "counts")
    for i, L in enumerate(Ls):
        if not (L > 0) or not math.isfinite(L):
            raise ValueError(f"half length for axis {i} must be positive and finite, got {L}")
    for i, n in enumerate(Ns):
        if int(n) != n or n < 4:
            raise ValueError(f"count for axis {i} must be an integer >= 4, got {n}")
    return Grid(tuple(float(L) for L in Ls), tuple(int(n) for n in Ns))


def _per_axis(value, dim: int, name: str) -> list:
    if np.isscalar(value):
        return [value] * dim
    vals = list(value)
    if len(vals) != dim:
        raise ValueError(f"{name} must have {dim} entries, got {len(vals)}")
    return vals


def as_field(grid: Grid, values) -> NDArray[np.float64]:
    """Coerce to a flat float64 field on ``grid``; reject wrong sizes and non-finite entries."""
    u = np.asarray(values, dtype=np.float64).ravel()
    if u.size != grid.n_points:
        raise ValueError(f"field has {u.size} values, grid has {grid.n_points} nodes")
    if not np.all(np.isfinite(u)):
        raise ValueError("field contains non-finite values")
    return u


def _check_field(grid: Grid, u: NDArray[np.float64]) -> None:
    if u.size != grid.n_points:
        raise ValueError(f"field has {u.size} values, grid has {grid.n_points} nodes")


def _pair_average(arr: NDArray[np.float64], axis: int) -> NDArray[np.float64]:
    lo = [slice(None)] * arr.ndim
    hi = [slice(None)] * arr.ndim
    lo[axis] = slice(0, -1)
    hi[axis] = slice(1, None)
    return 0.5 * (arr[tuple(lo)] + arr[tuple(hi)])


def _pair_average_adjoint(arr: NDArray[np.float64], axis: int, n: int) -> NDArray[np.float64]:
    shape = list(arr.shape)
    shape[axis] = n
    out = np.zeros(shape)
    lo = [slice(None)] * arr.ndim
    hi = [slice(None)] * arr.ndim
    lo[axis] = slice(0, -1)
    hi[axis] = slice(1, None)
    out[tuple(lo)] += 0.5 * arr
    out[tuple(hi)] += 0.5 * arr
    return out


def _diff_adjoint(arr: NDArray[np.float64], axis: int, n: int, dx: float) -> NDArray[np.float64]:
    shape = list(arr.shape)
    shape[axis] = n
    out = np.zeros(shape)
    lo = [slice(None)] * arr.ndim
    hi = [slice(None)] * arr.ndim
    lo[axis] = slice(0, -1)
    hi[axis] = slice(1, None)
    out[tuple(lo)] -= arr / dx
    out[tuple(hi)] += arr / dx
    return out


def _w_component(grid: Grid, u_nd: NDArray[np.float64], axis: int) -> NDArray[np.float64]:
    """Gradient component ``axis`` at cell centers (nd array on the cell lattice)."""
    e = np.diff(u_nd, axis=axis) / grid.spacings[axis]
    for j in range(grid.dim):
        if j != axis:
            e = _pair_average(e, j)
    return e


def _w_component_adjoint(grid: Grid, e: NDArray[np.float64], axis: int) -> NDArray[np.float64]:
    for j in reversed(range(grid.dim)):
        if j != axis:
            e = _pair_average_adjoint(e, j, grid.counts[j])
    return _diff_adjoint(e, axis, grid.counts[axis], grid.spacings[axis])


def apply_w(grid: Grid, u: NDArray[np.float64]) -> tuple[NDArray[np.float64], ...]:
    """All gradient components of ``u`` at cell centers, each flattened row-major.

    Returns a tuple with one array of length ``grid.n_cells`` per axis.
    """
    _check_field(grid, u)
    u_nd = grid.reshape(u)
    return tuple(_w_component(grid, u_nd, ax).ravel() for ax in range(grid.dim))


def apply_wtw(grid: Grid, u: NDArray[np.float64]) -> NDArray[np.float64]:
    """Matrix-free W^T W u (discrete negative Laplacian), returned flat."""
    _check_field(grid, u)
    u_nd = grid.reshape(u)
    out = np.zeros(grid.shape)
    for ax in range(grid.dim):
        out += _w_component_adjoint(grid, _w_component(grid, u_nd, ax), ax)
    return out.ravel()


def wtw_diagonal(grid: Grid) -> NDArray[np.float64]:
    """Diagonal of W^T W, flat.

    Node k touches prod_j c_j cells (c_j = 1 on the axis-j boundary, else 2);
    each touching cell contributes (1/4)^(d-1) / dx_i^2 to component i.
    """
    cells = np.ones(grid.shape)
    for j in range(grid.dim):
        c = np.full(grid.counts[j], 2.0)
        c[0] = 1.0
        c[-1] = 1.0
        shape = [1] * grid.dim
        shape[j] = grid.counts[j]
        cells = cells * c.reshape(shape)
    scale = sum(1.0 / dx**2 for dx in grid.spacings) / 4.0 ** (grid.dim - 1)
    return (cells * scale).ravel()


def grad_dot(grid: Grid, f: NDArray[np.float64], g: NDArray[np.float64]) -> float:
    """Unweighted sum over axes of <W_i f, W_i g> on the cell lattice."""
    _check_field(grid, f)
    _check_field(grid, g)
    f_nd = grid.reshape(f)
    g_nd = grid.reshape(g)
    total = 0.0
    for ax in range(grid.dim):
        total += float(np.sum(_w_component(grid, f_nd, ax) * _w_component(grid, g_nd, ax)))
    return total


def inner_l2(grid: Grid, f: NDArray[np.float64], g: NDArray[np.float64]) -> float:
    """Rectangle-rule L2 inner product: quad_weight * sum(f*g)."""
    _check_field(grid, f)
    _check_field(grid, g)
    return grid.quad_weight * float(np.dot(f, g))


def inner_h1(grid: Grid, f: NDArray[np.float64], g: NDArray[np.float64]) -> float:
    """Weighted H1 inner product: <f,g>_L2 + quad_weight * sum_i <W_i f, W_i g>."""
    return inner_l2(grid, f, g) + grid.quad_weight * grad_dot(grid, f, g)


def norm_l2(grid: Grid, f: NDArray[np.float64]) -> float:
    return math.sqrt(max(inner_l2(grid, f, f), 0.0))


def norm_h1(grid: Grid, f: NDArray[np.float64]) -> float:
    return math.sqrt(max(inner_h1(grid, f, f), 0.0))

"""Dense-matrix oracles used across the test suite.

These build the difference/averaging operators explicitly as (small) dense
matrices via Kronecker products, independently of the matrix-free code paths
they are used to check.  Keep them dense and dumb.
"""

import numpy as np

from gpground.grids import Grid


def diff_matrix(n: int, dx: float) -> np.ndarray:
    """(n-1) x n forward difference divided by dx."""
    D = np.zeros((n - 1, n))
    for i in range(n - 1):
        D[i, i] = -1.0 / dx
        D[i, i + 1] = 1.0 / dx
    return D


def average_matrix(n: int) -> np.ndarray:
    """(n-1) x n pairwise average onto cell midpoints."""
    A = np.zeros((n - 1, n))
    for i in range(n - 1):
        A[i, i] = 0.5
        A[i, i + 1] = 0.5
    return A


def dense_w_matrices(grid: Grid) -> list[np.ndarray]:
    """Dense gradient component matrices (cell lattice x nodes), one per axis."""
    mats = []
    for ax in range(grid.dim):
        factors = []
        for j in range(grid.dim):
            n = grid.counts[j]
            if j == ax:
                factors.append(diff_matrix(n, grid.spacings[ax]))
            else:
                factors.append(average_matrix(n))
        W = factors[0]
        for f in factors[1:]:
            W = np.kron(W, f)
        mats.append(W)
    return mats


def dense_wtw(grid: Grid) -> np.ndarray:
    Ws = dense_w_matrices(grid)
    return sum(W.T @ W for W in Ws)

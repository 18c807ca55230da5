"""Quadrature on uniform grids: cumulative integrals and periodic cell averages.

The cumulative rule is parabolic with alternating three-point stencils:
interval [x_j, x_{j+1}] integrates the interpolating parabola through nodes
(j, j+1, j+2) for even j and (j-1, j, j+1) for odd j, so consecutive pairs
sum to a composite Simpson pair.  The rule is exact on quadratics at every
node, fourth-order accurate at even nodes, and keeps the phase error on
oscillatory integrands far below the trapezoid rule at the same number of
nodes per period.
"""

import numpy as np


def cumulative(values, h):
    """Cumulative integral of nodal samples on a uniform grid of step h.

    values has shape (N+1, ...); entry i of the result approximates the
    integral from x_0 to x_i = x_0 + i*h.  Needs N >= 2.
    """
    g = np.asarray(values, dtype=float)
    N = g.shape[0] - 1
    if N < 2:
        raise ValueError("cumulative quadrature needs at least 2 subintervals")
    inc = np.zeros_like(g[:-1])
    je = np.arange(0, N - 1, 2)
    inc[je] = h * (5.0 * g[je] + 8.0 * g[je + 1] - g[je + 2]) / 12.0
    jo = np.arange(1, N, 2)
    inc[jo] = h * (-g[jo - 1] + 8.0 * g[jo] + 5.0 * g[jo + 1]) / 12.0
    if N % 2 == 1:
        # odd N leaves a final even-indexed interval with no forward node
        inc[N - 1] = h * (-g[N - 2] + 8.0 * g[N - 1] + 5.0 * g[N]) / 12.0
    out = np.zeros_like(g)
    out[1:] = np.cumsum(inc, axis=0)
    return out


def cumulative_weights(N, h):
    """Dense (N+1, N+1) matrix W with (W @ g)_i = cumulative(g, h)_i."""
    if N < 2:
        raise ValueError("cumulative quadrature needs at least 2 subintervals")
    W = np.zeros((N + 1, N + 1))
    eye = np.eye(N + 1)
    for j in range(N + 1):
        W[:, j] = cumulative(eye[:, j], h)
    return W


def cell_nodes(K):
    """K equispaced nodes on one period, left endpoints only.

    Equal weights 1/K at these nodes give the periodic trapezoid rule,
    which is spectrally accurate for smooth 1-periodic integrands.
    """
    if K < 2:
        raise ValueError("cell quadrature needs K >= 2")
    return np.arange(K) / float(K)

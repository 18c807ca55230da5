"""Integral-equation solver for the oscillatory and homogenized problems.

The divergence-form system is recast as a fixed-point problem for the pair
(u, v), v being the flux: u(x) integrates the inverted flux from 0, and v(x)
integrates the reaction backward from its boundary datum.  Two Dirichlet
conditions add an unknown flux level w at x = 1 together with the constraint
that the slope integrates to zero over [0, 1].

The same machinery solves the homogenized problem with the cell-averaged
coefficients in place of the oscillatory ones; pass eps = HOMOGENIZED.
"""

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.linalg import lu_factor, lu_solve

from .errors import NoConvergence, OutOfDomain, UnresolvedOscillation
from .homogenize import (DEFAULT_K, b0_derivatives, build_homogenized,
                         cell_slope_reaction)
from .model import DirichletNatural, GridFunction, NeumannAt1, TwoDirichlet
from .monotone import DEFAULT_INVERSION, invert_flux
from .quadrature import cumulative, cumulative_weights

HOMOGENIZED = math.inf

_THETA_FLOOR = 2.0 ** -10


@dataclass(frozen=True)
class SolverConfig:
    """Grid size and iteration policy for one solve.

    picard_tol bounds the sup norm of the residual of the integral system;
    nodes_per_period enforces the resolution rule N >= nodes_per_period/eps
    for oscillatory solves with eps < 1.
    """

    N: int
    picard_tol: float = 1e-10
    max_picard: int = 500
    mode: str = "picard"
    nodes_per_period: int = 16

    def __post_init__(self):
        if self.N < 2:
            raise ValueError("need N >= 2")
        if self.picard_tol <= 0.0:
            raise ValueError("picard_tol must be positive")
        if self.max_picard < 1:
            raise ValueError("max_picard must be at least 1")
        if self.mode not in ("picard", "frozen"):
            raise ValueError("mode must be 'picard' or 'frozen'")
        if self.nodes_per_period < 1:
            raise ValueError("nodes_per_period must be positive")


@dataclass(frozen=True)
class SolveReport:
    """Converged (or last) iterate of one solve, with iteration diagnostics."""

    u: GridFunction
    v: GridFunction
    w: Optional[np.ndarray]
    iterations: int
    residual_history: list
    converged: bool

    def contraction_ratios(self):
        """Observed per-iteration residual ratios (empirical contraction)."""
        h = self.residual_history
        return [h[k + 1] / h[k] for k in range(len(h) - 1) if h[k] > 0.0]


@dataclass(frozen=True)
class ResidualParts:
    """Residual of the integral system; rw is present for two-Dirichlet only."""

    ru: GridFunction
    rv: GridFunction
    rw: Optional[np.ndarray] = None

    def sup(self):
        parts = [self.ru.sup_norm(), self.rv.sup_norm()]
        if self.rw is not None:
            parts.append(float(np.linalg.norm(self.rw)))
        return max(parts)

    def stack(self):
        """Residual as one flat vector in the solver's stacking order."""
        parts = [self.ru.values.ravel(), self.rv.values.ravel()]
        if self.rw is not None:
            parts.append(self.rw)
        return np.concatenate(parts)


def grid_size_for(eps, nodes_per_period=16):
    """Default subinterval count: nodes_per_period/eps rounded up to a
    multiple of 16; 512 for the homogenized problem and for eps >= 1."""
    if math.isinf(eps) or eps >= 1.0:
        return 512
    return 16 * int(math.ceil(nodes_per_period / eps / 16.0))


class _OscillatoryKernel:
    """Slope/reaction evaluations of the eps-problem along the grid.

    slope_reaction returns (slope, reaction, warm); warm is kernel-private
    state that accelerates the next call at nearby arguments.
    """

    def __init__(self, P, eps, inversion):
        self.P = P
        self.eps = eps
        self.inversion = inversion
        self.n = P.n

    def slope_reaction(self, x, u, v, warm=None):
        P = self.P
        s = invert_flux(P, x, x / self.eps, u, v, cfg=self.inversion, initial=warm)
        return s, P.f(x, x / self.eps, u, s), s

    def slope(self, x, u, v, warm=None):
        return invert_flux(self.P, x, x / self.eps, u, v, cfg=self.inversion, initial=warm)

    def derivs(self, x, u, v, slope):
        P, y = self.P, x / self.eps
        Jinv = np.linalg.inv(P.da_dp(x, y, u, slope))
        db_du = -Jinv @ P.da_du(x, y, u, slope)
        df_dp = P.df_dp(x, y, u, slope)
        e1 = P.df_du(x, y, u, slope) + df_dp @ db_du
        e2 = df_dp @ Jinv
        return db_du, Jinv, e1, e2

    def flux_from_slope(self, u1, slope):
        return self.P.a(1.0, 1.0 / self.eps, u1, slope)

    def flux_from_slope_du(self, u1, slope):
        return self.P.da_du(1.0, 1.0 / self.eps, u1, slope)


class _HomogenizedKernel:
    """Same interface with the cell-averaged coefficients b0, f0."""

    def __init__(self, coeffs, inversion):
        self.H = coeffs
        self.P = coeffs.problem
        self.inversion = inversion
        self.n = self.P.n

    def slope_reaction(self, x, u, v, warm=None):
        return cell_slope_reaction(self.P, x, u, v, self.H.K, self.inversion,
                                   initial=warm)

    def slope(self, x, u, v, warm=None):
        return cell_slope_reaction(self.P, x, u, v, self.H.K, self.inversion,
                                   initial=warm)[0]

    def derivs(self, x, u, v, slope):
        db_du, db_dv = b0_derivatives(self.P, x, u, v, self.H.K, self.inversion)
        return db_du, db_dv, self.H.df0_du(x, u, v), self.H.df0_dp(x, u, v)

    def flux_from_slope(self, u1, slope):
        return self.H.a0(1.0, u1, slope)

    def flux_from_slope_du(self, u1, slope):
        return self.H.da0_du(1.0, u1, slope)


def _make_kernel(P, eps, coeffs, inversion, K=DEFAULT_K):
    if math.isinf(eps):
        if coeffs is None:
            coeffs = build_homogenized(P, K, inversion)
        return _HomogenizedKernel(coeffs, inversion)
    if not eps > 0.0:
        raise ValueError("eps must be positive (or HOMOGENIZED)")
    return _OscillatoryKernel(P, eps, inversion)


def _check_resolution(eps, N, nodes_per_period):
    # eps >= 1 completes less than one period; nothing to resolve
    if not math.isinf(eps) and eps < 1.0 and N < nodes_per_period / eps:
        raise UnresolvedOscillation(
            f"N = {N} is below nodes_per_period/eps = {nodes_per_period / eps:.1f}"
        )


def _flux_datum(kernel, bc, u_arr, w):
    if isinstance(bc, DirichletNatural):
        return bc.flux_datum
    if isinstance(bc, NeumannAt1):
        return kernel.flux_from_slope(u_arr[-1], bc.slope_datum)
    if isinstance(bc, TwoDirichlet):
        return w
    raise TypeError(f"unsupported boundary condition {bc!r}")


def _residual_arrays(kernel, bc, x, h, u_arr, v_arr, w, warm=None):
    slope, g, warm = kernel.slope_reaction(x, u_arr, v_arr, warm)
    cum_slope = cumulative(slope, h)
    ru = u_arr - cum_slope
    cum_g = cumulative(g, h)
    rv = v_arr - _flux_datum(kernel, bc, u_arr, w) + (cum_g[-1] - cum_g)
    rw = cum_slope[-1].copy() if isinstance(bc, TwoDirichlet) else None
    return ru, rv, rw, warm


def _as_values(g, N, n):
    """Accept a GridFunction or array; interpolate to the N-grid if needed."""
    if isinstance(g, GridFunction):
        if g.n != n:
            raise ValueError(f"expected {n} components, got {g.n}")
        if g.N == N:
            return g.values.copy()
        return g(np.linspace(0.0, 1.0, N + 1))
    arr = np.asarray(g, dtype=float)
    if arr.ndim == 1:
        arr = arr[:, None]
    if arr.shape != (N + 1, n):
        raise ValueError(f"expected shape ({N + 1}, {n}), got {arr.shape}")
    return arr.copy()


def residual_eps(P, eps, bc, u, v, w=None, *, nodes_per_period=16,
                 coeffs=None, inversion=DEFAULT_INVERSION, K=DEFAULT_K):
    """Residual of the integral system at (u, v[, w]).

    eps = HOMOGENIZED evaluates the homogenized residual with b0, f0.
    Raises OutOfDomain when ||u||_inf >= radius and UnresolvedOscillation
    when the grid violates the resolution rule.
    """
    if isinstance(bc, TwoDirichlet) == (w is None):
        raise ValueError("w is required for TwoDirichlet and only then")
    if u.N != v.N or u.n != v.n or u.n != P.n:
        raise ValueError("u and v must share the problem's grid and dimension")
    if u.sup_norm() >= P.radius:
        raise OutOfDomain(f"||u||_inf >= radius {P.radius}")
    _check_resolution(eps, u.N, nodes_per_period)
    kernel = _make_kernel(P, eps, coeffs, inversion, K)
    x = u.nodes()
    h = 1.0 / u.N
    wv = None if w is None else np.atleast_1d(np.asarray(w, dtype=float))
    ru, rv, rw, _ = _residual_arrays(kernel, bc, x, h, u.values, v.values, wv)
    return ResidualParts(GridFunction(ru), GridFunction(rv), rw)


def assemble_linearization(P, eps, bc, u, v, w=None, *, coeffs=None,
                           inversion=DEFAULT_INVERSION, K=DEFAULT_K,
                           nodes_per_period=16):
    """Dense matrix of the linearized discrete integral system at (u, v[, w]).

    Acts on the stacked nodal vector [u; v] (plus w for two-Dirichlet) in
    node-major order.  The u-row blocks subtract cumulative quadrature of the
    slope derivatives; the v-row blocks add the backward quadrature of the
    reaction derivatives; a Neumann datum contributes its coupling to u(1).
    """
    kernel = _make_kernel(P, eps, coeffs, inversion, K)
    n = P.n
    if isinstance(u, GridFunction):
        N = u.N
    else:
        N = np.asarray(u).shape[0] - 1
    _check_resolution(eps, N, nodes_per_period)
    u_arr = _as_values(u, N, n)
    v_arr = _as_values(v, N, n)
    x = np.linspace(0.0, 1.0, N + 1)
    h = 1.0 / N
    C = cumulative_weights(N, h)
    tailW = C[-1][None, :] - C
    slopes = kernel.slope(x, u_arr, v_arr)
    D1, D2, E1, E2 = kernel.derivs(x, u_arr, v_arr, slopes)
    sz = (N + 1) * n
    eye = np.eye(sz)
    UU = eye - np.einsum("ij,jab->iajb", C, D1).reshape(sz, sz)
    UV = -np.einsum("ij,jab->iajb", C, D2).reshape(sz, sz)
    VU4 = np.einsum("ij,jab->iajb", tailW, E1)
    if isinstance(bc, NeumannAt1):
        VU4[:, :, N, :] -= kernel.flux_from_slope_du(u_arr[-1], bc.slope_datum)
    VU = VU4.reshape(sz, sz)
    VV = eye + np.einsum("ij,jab->iajb", tailW, E2).reshape(sz, sz)
    if not isinstance(bc, TwoDirichlet):
        return np.block([[UU, UV], [VU, VV]])
    Vw = -np.tile(np.eye(n), (N + 1, 1))
    WU = np.einsum("j,jab->ajb", C[-1], D1).reshape(n, sz)
    WV = np.einsum("j,jab->ajb", C[-1], D2).reshape(n, sz)
    return np.block([
        [UU, UV, np.zeros((sz, n))],
        [VU, VV, Vw],
        [WU, WV, np.zeros((n, n))],
    ])


def _partial_report(u_arr, v_arr, w, history):
    return SolveReport(
        u=GridFunction(u_arr),
        v=GridFunction(v_arr),
        w=None if w is None else w.copy(),
        iterations=len(history),
        residual_history=list(history),
        converged=False,
    )


def solve_eps(P, eps, bc, cfg, initial=None, coeffs=None,
              inversion=DEFAULT_INVERSION, K=DEFAULT_K):
    """Solve the integral system for one eps (or the homogenized problem).

    Picard mode sweeps the damped fixed-point map; frozen mode factorizes the
    linearization once at the initial iterate and iterates the quasi-Newton
    map.  The initial iterate defaults to the homogenized solution for finite
    eps and to zeros for the homogenized problem itself.
    """
    N, n = cfg.N, P.n
    _check_resolution(eps, N, cfg.nodes_per_period)
    two_d = isinstance(bc, TwoDirichlet)
    if not math.isinf(eps) and coeffs is None and initial is None:
        coeffs = build_homogenized(P, K, inversion)
    kernel = _make_kernel(P, eps, coeffs, inversion, K)

    if initial is None:
        if math.isinf(eps):
            u_arr = np.zeros((N + 1, n))
            v_arr = np.zeros((N + 1, n))
            w = np.zeros(n) if two_d else None
        else:
            hom = solve_eps(P, HOMOGENIZED, bc, cfg, coeffs=coeffs,
                            inversion=inversion, K=K)
            u_arr, v_arr = hom.u.values.copy(), hom.v.values.copy()
            w = None if hom.w is None else hom.w.copy()
    else:
        parts = tuple(initial)
        u_arr = _as_values(parts[0], N, n)
        v_arr = _as_values(parts[1], N, n)
        if two_d:
            if len(parts) != 3:
                raise ValueError("two-Dirichlet initial iterate needs (u, v, w)")
            w = np.atleast_1d(np.asarray(parts[2], dtype=float)).copy()
        else:
            w = None

    x = np.linspace(0.0, 1.0, N + 1)
    h = 1.0 / N

    frozen_lu = None
    if cfg.mode == "frozen":
        A = assemble_linearization(P, eps, bc, u_arr, v_arr, w, coeffs=coeffs,
                                   inversion=inversion, K=K,
                                   nodes_per_period=cfg.nodes_per_period)
        frozen_lu = lu_factor(A)
    w_gain = None

    theta, streak, prev = 1.0, 0, np.inf
    history = []
    warm = None
    for _ in range(cfg.max_picard):
        if np.linalg.norm(u_arr, axis=1).max() >= P.radius:
            raise OutOfDomain(
                f"iterate left ||u||_inf < {P.radius}",
                report=_partial_report(u_arr, v_arr, w, history),
            )
        ru, rv, rw, warm = _residual_arrays(kernel, bc, x, h, u_arr, v_arr, w,
                                            warm=warm)
        res = max(np.linalg.norm(ru, axis=1).max(), np.linalg.norm(rv, axis=1).max(),
                  0.0 if rw is None else float(np.linalg.norm(rw)))
        history.append(res)
        if res <= cfg.picard_tol:
            return SolveReport(
                u=GridFunction(u_arr), v=GridFunction(v_arr),
                w=None if w is None else w.copy(),
                iterations=len(history), residual_history=history, converged=True,
            )
        # backtracking: halve on residual growth, restore after 3 decreases
        if res > prev:
            theta, streak = max(theta / 2.0, _THETA_FLOOR), 0
        else:
            streak += 1
            if streak >= 3:
                theta = 1.0
        prev = res

        if frozen_lu is not None:
            stacked = [ru.ravel(), rv.ravel()] + ([] if rw is None else [rw])
            step = lu_solve(frozen_lu, np.concatenate(stacked))
            u_arr = u_arr - theta * step[: (N + 1) * n].reshape(N + 1, n)
            v_arr = v_arr - theta * step[(N + 1) * n: 2 * (N + 1) * n].reshape(N + 1, n)
            if two_d:
                w = w - theta * step[2 * (N + 1) * n:]
        else:
            u_arr = u_arr - theta * ru
            v_arr = v_arr - theta * rv
            if two_d:
                # Gauss-Seidel for the constraint: re-evaluate the slope
                # integral at the fresh (u, v) before correcting w, else the
                # stale residual makes the w <-> v loop oscillate undamped
                slope_gs, _, warm = kernel.slope_reaction(x, u_arr, v_arr, warm=warm)
                if w_gain is None:
                    db_dv = kernel.derivs(x, u_arr, v_arr, slope_gs)[1]
                    w_gain = np.linalg.inv(db_dv.mean(axis=0))
                w = w - theta * (w_gain @ cumulative(slope_gs, h)[-1])

    raise NoConvergence(
        f"no convergence in {cfg.max_picard} iterations (last residual {history[-1]:.3e})",
        report=_partial_report(u_arr, v_arr, w, history),
    )


def solve_homogenized(P, bc, cfg, coeffs=None, initial=None,
                      inversion=DEFAULT_INVERSION, K=DEFAULT_K):
    """Solve the homogenized problem: same machinery with b0, f0."""
    return solve_eps(P, HOMOGENIZED, bc, cfg, initial=initial, coeffs=coeffs,
                     inversion=inversion, K=K)


def solve_two_dirichlet(P, eps, cfg, initial=None, coeffs=None,
                        inversion=DEFAULT_INVERSION, K=DEFAULT_K):
    """Solve with u(0) = u(1) = 0; eps may be HOMOGENIZED.

    The report's w is the flux level at x = 1; at convergence the constraint
    forces ||u(1)|| below the solver tolerance.
    """
    return solve_eps(P, eps, TwoDirichlet(), cfg, initial=initial, coeffs=coeffs,
                     inversion=inversion, K=K)

"""Effective (cell-averaged) coefficients of the oscillatory problem.

The inverse flux b is averaged over one period of the fast variable to give
b0; the effective flux a0 is the monotone inverse of b0, and the effective
reaction f0 averages f along the slope family b(x, y, u, v).  Derivatives of
the effective maps are assembled from closed cell-quadrature formulas rather
than by differencing the iterative evaluators.

Argument conventions: b0, f0 and their derivatives take the flux value v as
third argument; a0 and its derivatives take the slope p.
"""

from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.interpolate import CubicSpline

from .errors import SingularCoefficient
from .model import broadcast_args
from .monotone import DEFAULT_INVERSION, invert_flux, invert_monotone
from .quadrature import cell_nodes, cumulative

DEFAULT_K = 128


def _cell_batch(n, x, u, v, K):
    """Expand (B,) points to the (B*K,) product grid with the cell nodes."""
    x, _, u, v, single = broadcast_args(n, x, 0.0, u, v)
    B = x.shape[0]
    ys = cell_nodes(K)
    xx = np.repeat(x, K)
    yy = np.tile(ys, B)
    uu = np.repeat(u, K, axis=0)
    vv = np.repeat(v, K, axis=0)
    return xx, yy, uu, vv, B, single


def _cell_slopes(P, x, u, v, K, cfg, initial=None):
    """Slopes b(x, y_j, u, v) on the cell grid, shape (B, K, n)."""
    xx, yy, uu, vv, B, single = _cell_batch(P.n, x, u, v, K)
    warm = None if initial is None else np.asarray(initial, dtype=float).reshape(B * K, P.n)
    slopes = invert_flux(P, xx, yy, uu, vv, cfg=cfg, initial=warm)
    return xx, yy, uu, slopes.reshape(B, K, P.n), single


def average_b0(P, x, u, v, K=DEFAULT_K, cfg=DEFAULT_INVERSION):
    """Cell average of the inverse flux, by the K-node periodic trapezoid rule."""
    _, _, _, slopes, single = _cell_slopes(P, x, u, v, K, cfg)
    out = slopes.mean(axis=1)
    return out[0] if single else out


def average_f0(P, x, u, v, K=DEFAULT_K, cfg=DEFAULT_INVERSION):
    """Cell average of the reaction along the slope family b(x, y, u, v)."""
    xx, yy, uu, slopes, single = _cell_slopes(P, x, u, v, K, cfg)
    vals = P.f(xx, yy, uu, slopes.reshape(-1, P.n)).reshape(slopes.shape)
    out = vals.mean(axis=1)
    return out[0] if single else out


def cell_slope_reaction(P, x, u, v, K=DEFAULT_K, cfg=DEFAULT_INVERSION, initial=None):
    """One cell pass giving (b0, f0, cell slopes) for batched (x, u, v).

    The returned (B, K, n) slope array can warm-start the next call at nearby
    arguments, which is what the solver's sweeps do.
    """
    xx, yy, uu, slopes, _ = _cell_slopes(P, x, u, v, K, cfg, initial=initial)
    vals = P.f(xx, yy, uu, slopes.reshape(-1, P.n)).reshape(slopes.shape)
    return slopes.mean(axis=1), vals.mean(axis=1), slopes


def b0_derivatives(P, x, u, v, K=DEFAULT_K, cfg=DEFAULT_INVERSION):
    """Cell averages of the inverse-flux derivatives: (db0_du, db0_dv)."""
    xx, yy, uu, slopes, single = _cell_slopes(P, x, u, v, K, cfg)
    B = slopes.shape[0]
    flat = slopes.reshape(-1, P.n)
    Jinv = np.linalg.inv(P.da_dp(xx, yy, uu, flat))
    db_du = -Jinv @ P.da_du(xx, yy, uu, flat)
    db0_dv = Jinv.reshape(B, K, P.n, P.n).mean(axis=1)
    db0_du = db_du.reshape(B, K, P.n, P.n).mean(axis=1)
    if single:
        return db0_du[0], db0_dv[0]
    return db0_du, db0_dv


@dataclass(frozen=True)
class HomogenizedCoefficients:
    """Evaluators for the effective coefficients of one problem.

    b0(x, u, v) and f0(x, u, v) take the flux v; a0(x, u, p) takes the slope.
    The derivative evaluators follow the same conventions (da0_* in p,
    df0_* in v).  All accept single points or batches.  m0 = m^3/M^2 and
    M0 = M^2/m are the monotonicity and Lipschitz constants inherited by a0.
    """

    problem: object
    b0: Callable
    a0: Callable
    f0: Callable
    da0_du: Callable
    da0_dp: Callable
    df0_du: Callable
    df0_dp: Callable
    K: int
    m0: float
    M0: float


def build_homogenized(P, K=DEFAULT_K, cfg=DEFAULT_INVERSION):
    """Build the effective coefficient evaluators for problem P.

    a0 inverts v -> b0(x, u, v) with the monotone contraction for b0's
    constants (m/M^2, 1/m); the derivative evaluators use the closed
    cell-quadrature formulas, e.g. da0_dp = (cell mean of da_dp^-1)^-1
    with da_dp taken along the local slope family.
    """
    m_b = P.m / (P.M * P.M)
    M_b = 1.0 / P.m

    def b0(x, u, v):
        return average_b0(P, x, u, v, K, cfg)

    def f0(x, u, v):
        return average_f0(P, x, u, v, K, cfg)

    def a0(x, u, p):
        xb, _, ub, pb, single = broadcast_args(P.n, x, 0.0, u, p)

        def F(z):
            return average_b0(P, xb, ub, z, K, cfg)

        def jac(z):
            return b0_derivatives(P, xb, ub, z, K, cfg)[1]

        v = invert_monotone(F, pb, m_b, M_b, jac=jac, cfg=cfg)
        return v[0] if single else v

    def da0_dp(x, u, p):
        xb, _, ub, pb, single = broadcast_args(P.n, x, 0.0, u, p)
        v = a0(xb, ub, pb)
        db0_dv = b0_derivatives(P, xb, ub, v, K, cfg)[1]
        out = np.linalg.inv(db0_dv)
        return out[0] if single else out

    def da0_du(x, u, p):
        xb, _, ub, pb, single = broadcast_args(P.n, x, 0.0, u, p)
        v = a0(xb, ub, pb)
        db0_du, db0_dv = b0_derivatives(P, xb, ub, v, K, cfg)
        out = -np.linalg.inv(db0_dv) @ db0_du
        return out[0] if single else out

    def df0_dp(x, u, v):
        xx, yy, uu, slopes, single = _cell_slopes(P, x, u, v, K, cfg)
        B = slopes.shape[0]
        flat = slopes.reshape(-1, P.n)
        Jinv = np.linalg.inv(P.da_dp(xx, yy, uu, flat))
        vals = P.df_dp(xx, yy, uu, flat) @ Jinv
        out = vals.reshape(B, K, P.n, P.n).mean(axis=1)
        return out[0] if single else out

    def df0_du(x, u, v):
        xx, yy, uu, slopes, single = _cell_slopes(P, x, u, v, K, cfg)
        B = slopes.shape[0]
        flat = slopes.reshape(-1, P.n)
        Jinv = np.linalg.inv(P.da_dp(xx, yy, uu, flat))
        vals = P.df_du(xx, yy, uu, flat) - P.df_dp(xx, yy, uu, flat) @ Jinv @ P.da_du(xx, yy, uu, flat)
        out = vals.reshape(B, K, P.n, P.n).mean(axis=1)
        return out[0] if single else out

    return HomogenizedCoefficients(
        problem=P,
        b0=b0,
        a0=a0,
        f0=f0,
        da0_du=da0_du,
        da0_dp=da0_dp,
        df0_du=df0_du,
        df0_dp=df0_dp,
        K=K,
        m0=P.m ** 3 / P.M ** 2,
        M0=P.M ** 2 / P.m,
    )


def linear_homogenize(A, abar, F, fbar, K=DEFAULT_K):
    """Effective quantities for affine data a = A(y) p + abar(y), f = F(y) p + fbar(y).

    Returns (A0, abar0, F0, fbar0) with
        A0    = (mean of A^-1)^-1
        abar0 = A0 * mean(A^-1 abar)
        F0    = mean(F A^-1)
        fbar0 = mean(fbar - F A^-1 abar),
    all cell means taken with the K-node periodic trapezoid rule.  The
    effective maps are then a0(p) = A0 p + abar0 and f0(v) = F0 v + fbar0.
    """
    ys = cell_nodes(K)
    Ays = np.stack([np.atleast_2d(np.asarray(A(y), dtype=float)) for y in ys])
    abars = np.stack([np.atleast_1d(np.asarray(abar(y), dtype=float)) for y in ys])
    Fys = np.stack([np.atleast_2d(np.asarray(F(y), dtype=float)) for y in ys])
    fbars = np.stack([np.atleast_1d(np.asarray(fbar(y), dtype=float)) for y in ys])
    try:
        Ainv = np.linalg.inv(Ays)
    except np.linalg.LinAlgError:
        raise SingularCoefficient("A(y) is singular at a quadrature node") from None
    mean_Ainv = Ainv.mean(axis=0)
    try:
        A0 = np.linalg.inv(mean_Ainv)
    except np.linalg.LinAlgError:
        raise SingularCoefficient("the cell mean of A^-1 is singular") from None
    Ainv_abar = (Ainv @ abars[..., None])[..., 0]
    abar0 = A0 @ Ainv_abar.mean(axis=0)
    F_Ainv = Fys @ Ainv
    F0 = F_Ainv.mean(axis=0)
    fbar0 = (fbars - (F_Ainv @ abars[..., None])[..., 0]).mean(axis=0)
    return A0, abar0, F0, fbar0


def corrector_w(P, x, u, vbar, K=DEFAULT_K, cfg=DEFAULT_INVERSION):
    """Cell corrector for flux level vbar: the mean-zero periodic primitive of
    b(x, ., u, vbar) - b0(x, u, vbar).

    Returns an evaluator y -> R^n (1-periodic, interpolated from K+1 samples).
    Adding its y-derivative to the constant slope b0 makes the flux constant
    across the cell.
    """
    x, _, u, vbar, _ = broadcast_args(P.n, x, 0.0, u, vbar)
    if x.shape[0] != 1:
        raise ValueError("corrector_w takes a single point")
    ys = np.linspace(0.0, 1.0, K + 1)
    slopes = invert_flux(
        P,
        np.broadcast_to(x, (K + 1,)),
        ys,
        np.broadcast_to(u, (K + 1, P.n)),
        np.broadcast_to(vbar, (K + 1, P.n)),
        cfg=cfg,
    )
    b0 = slopes[:-1].mean(axis=0)
    cum = cumulative(slopes - b0, 1.0 / K)
    # subtract the cell mean of the primitive so the corrector is mean-zero
    mean_cum = cumulative(cum, 1.0 / K)[-1]
    w_nodes = cum - mean_cum
    # the mean-zero integrand makes the primitive periodic up to quadrature
    # seam; close it exactly so the periodic spline is well posed
    w_nodes[-1] = w_nodes[0]
    spline = CubicSpline(ys, w_nodes, bc_type="periodic")

    def w(y):
        yy = np.mod(np.asarray(y, dtype=float), 1.0)
        return np.atleast_1d(spline(yy))

    return w


def a0_dual(P, x, u, v_target, K=DEFAULT_K, cfg=DEFAULT_INVERSION):
    """Effective flux through the corrector route.

    The corrected slope family realizing flux level v_target is exactly
    b(x, y, u, v_target); averaging the flux along it must return v_target,
    which makes this a self-consistency cross-check of build_homogenized.
    """
    xx, yy, uu, slopes, single = _cell_slopes(P, x, u, v_target, K, cfg)
    vals = P.a(xx, yy, uu, slopes.reshape(-1, P.n)).reshape(slopes.shape)
    out = vals.mean(axis=1)
    return out[0] if single else out


def cell_refinement_gap(P, x, u, v, K=DEFAULT_K, cfg=DEFAULT_INVERSION):
    """Max difference of the b0 cell average at K and 2K nodes.

    Self-check for quadrature adequacy when the data is not smooth in the
    fast variable; smooth-in-y data gives machine-level gaps for K >= 64.
    """
    g1 = average_b0(P, x, u, v, K, cfg)
    g2 = average_b0(P, x, u, v, 2 * K, cfg)
    return float(np.max(np.linalg.norm(np.atleast_2d(g1 - g2), axis=-1)))

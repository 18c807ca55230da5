"""Nondegeneracy checks, the oscillation-gap bound, and convergence-rate fits."""

from dataclasses import dataclass

import numpy as np
from scipy.ndimage import maximum_filter1d, minimum_filter1d

from .bvp import HOMOGENIZED, assemble_linearization
from .errors import InvalidSample
from .model import TwoDirichlet
from .monotone import DEFAULT_INVERSION
from .quadrature import cell_nodes, cumulative

SIGMA_THRESHOLD = 1e-6
STABILITY_RTOL = 0.2


@dataclass(frozen=True)
class RateFit:
    """Power-law fit error ~ C * eps^p from a log-log least-squares line."""

    p: float
    C: float
    r2: float
    samples: tuple

    def __str__(self):
        return f"p = {self.p:.4f}, C = {self.C:.4g}, r2 = {self.r2:.6f}"


def rate_fit(samples):
    """Fit (eps, error) samples to error = C * eps^p.

    Needs at least 3 samples with strictly decreasing eps and positive
    errors; raises InvalidSample otherwise.
    """
    samples = [(float(e), float(err)) for e, err in samples]
    if len(samples) < 3:
        raise InvalidSample("need at least 3 samples")
    eps = np.array([s[0] for s in samples])
    err = np.array([s[1] for s in samples])
    if np.any(err <= 0.0):
        raise InvalidSample("errors must be positive")
    if np.any(np.diff(eps) >= 0.0) or eps[-1] <= 0.0:
        raise InvalidSample("eps must be strictly decreasing and positive")
    le, lr = np.log(eps), np.log(err)
    slope, intercept = np.polyfit(le, lr, 1)
    fitted = slope * le + intercept
    ss_res = float(np.sum((lr - fitted) ** 2))
    ss_tot = float(np.sum((lr - lr.mean()) ** 2))
    r2 = 1.0 if ss_tot == 0.0 and ss_res <= 1e-24 else 1.0 - ss_res / max(ss_tot, 1e-300)
    return RateFit(p=float(slope), C=float(np.exp(intercept)), r2=r2, samples=tuple(samples))


def _sigma_min(P, H, u0, v0, bc, N, inversion):
    xs = np.linspace(0.0, 1.0, N + 1)
    w = np.zeros(P.n) if isinstance(bc, TwoDirichlet) else None
    A = assemble_linearization(P, HOMOGENIZED, bc, u0(xs), v0(xs), w,
                               coeffs=H, inversion=inversion)
    return float(np.linalg.svd(A, compute_uv=False)[-1])


def check_nondegenerate(P, H, u0, v0, bc, N=64, inversion=DEFAULT_INVERSION):
    """Smallest singular value of the linearized homogenized integral system.

    Assembles the discrete linearization at the homogenized solution (u0, v0)
    on grids of N and 2N subintervals.  The solution passes when sigma_min
    exceeds 1e-6 and is stable (within 20 percent) under refinement; a
    genuine kernel drives sigma_min to zero as the grid is refined.
    """
    s1 = _sigma_min(P, H, u0, v0, bc, N, inversion)
    s2 = _sigma_min(P, H, u0, v0, bc, 2 * N, inversion)
    stable = abs(s2 - s1) < STABILITY_RTOL * max(s1, 1e-300)
    return s1, bool(s1 > SIGMA_THRESHOLD and stable)


def sufficient_condition(P, H, u0, v0, N_samples=33):
    """Explicit sufficient nondegeneracy test along a homogenized solution.

    Checks at each sample that the symmetric part of df0_dp is positive
    definite with margin beyond the comparison norms:
        lambda_min(sym df0_dp) > ||da0_du|| + ||df0_du||.
    This is one concrete quantification of the "definiteness dominates the
    u-derivatives" criterion; it is sufficient, not necessary.
    """
    xs = np.linspace(0.0, 1.0, N_samples)
    u = u0(xs)
    v = v0(xs)
    p = H.b0(xs, u, v)
    M1 = H.df0_dp(xs, u, v)
    A1 = H.da0_du(xs, u, p)
    F1 = H.df0_du(xs, u, v)
    for k in range(N_samples):
        sym = 0.5 * (M1[k] + M1[k].T)
        lam = float(np.linalg.eigvalsh(sym)[0])
        bound = float(np.linalg.norm(A1[k], 2) + np.linalg.norm(F1[k], 2))
        if not lam > bound:
            return False
    return True


def _eval_vec(g, x, y):
    """Evaluate a user map (x, y) -> R^n on arrays, normalizing to (..., n)."""
    out = np.asarray(g(x, y), dtype=float)
    if out.ndim == np.ndim(x):
        out = out[..., None]
    return out


def oscillation_gap(g, dgdx, eps, x, K=64):
    """Gap between an oscillatory integral and its cell-averaged limit,
    together with the a-priori bound it must satisfy.

    lhs = || int_0^x (g(y, y/eps) - cell mean of g(y, .)) dy ||, resolved
    quadrature.  bound = 2 eps (||g||* + ||dg/dx||*) when dgdx is supplied,
    else 2 (omega_g(eps) + eps ||g||*) with the sup norms and the modulus of
    continuity in x estimated by dense sampling.
    """
    if not eps > 0.0:
        raise ValueError("eps must be positive")
    if not 0.0 <= x <= 1.0:
        raise ValueError("x must lie in [0, 1]")
    lhs = 0.0
    if x > 0.0:
        Nq = max(256, 2 * int(np.ceil(12.0 * x / eps)))
        ys = np.linspace(0.0, x, Nq + 1)
        cell = cell_nodes(K)
        osc = _eval_vec(g, ys, ys / eps)
        means = _eval_vec(g, np.repeat(ys, K), np.tile(cell, Nq + 1))
        means = means.reshape(Nq + 1, K, -1).mean(axis=1)
        F = cumulative(osc - means, x / Nq)
        lhs = float(np.linalg.norm(F[-1]))

    Mx, My = 2048, 128
    xs = np.linspace(0.0, 1.0, Mx + 1)
    ysamp = cell_nodes(My)
    vals = _eval_vec(g, xs[:, None], ysamp[None, :])  # (Mx+1, My, n)
    gstar = float(np.linalg.norm(vals, axis=-1).max())
    if dgdx is not None:
        dvals = _eval_vec(dgdx, xs[:, None], ysamp[None, :])
        dstar = float(np.linalg.norm(dvals, axis=-1).max())
        bound = 2.0 * eps * (gstar + dstar)
    else:
        # modulus of continuity in x over windows of width eps, per component
        size = int(np.ceil(eps * Mx)) + 1
        hi = maximum_filter1d(vals, size=size, axis=0, mode="nearest")
        lo = minimum_filter1d(vals, size=size, axis=0, mode="nearest")
        omega = float(np.linalg.norm(hi - lo, axis=-1).max())
        bound = 2.0 * (omega + eps * gstar)
    return lhs, bound

"""Pointwise inversion of the strongly monotone flux and its derivatives.

A strongly monotone Lipschitz map T with constants (m, M) is inverted by the
damped iteration z <- z - (m/M^2)(T(z) - v), which contracts globally with
factor sqrt(1 - m^2/M^2) < 1.  A Newton candidate built from the analytic
Jacobian is taken whenever it lowers the residual faster; the damped step
remains the unconditional fallback.
"""

from dataclasses import dataclass

import numpy as np

from .errors import NoConvergence, OutOfDomain, SingularJacobian
from .model import broadcast_args


@dataclass(frozen=True)
class InversionConfig:
    """Stopping rule for monotone inversion: residual tolerance and cap.

    The tolerance is on the residual ||T(z) - v||; strong monotonicity turns
    it into the error bound ||z - z*|| <= tol / m.
    """

    tol: float = 1e-12
    max_iter: int = 10_000

    def __post_init__(self):
        if self.tol <= 0.0:
            raise ValueError("tol must be positive")
        if self.max_iter < 1:
            raise ValueError("max_iter must be at least 1")


DEFAULT_INVERSION = InversionConfig()


def _row_norm(r):
    if r.shape[-1] == 1:
        return np.abs(r[..., 0])
    return np.linalg.norm(r, axis=-1)


def _newton_step(J, r):
    """Solve J dz = r rowwise; None when any Jacobian is unusable."""
    if J.shape[-1] == 1:
        d = J[..., 0, 0]
        if np.any(d == 0.0) or not np.all(np.isfinite(d)):
            return None
        return r / d[..., None]
    try:
        return np.linalg.solve(J, r[..., None])[..., 0]
    except np.linalg.LinAlgError:
        return None


def invert_monotone(F, target, m, M, x0=None, jac=None, cfg=DEFAULT_INVERSION):
    """Solve F(z) = target rowwise for a strongly monotone Lipschitz F.

    F maps (B, n) -> (B, n); jac, if given, returns the (B, n, n) Jacobians.
    Returns z with ||F(z) - target|| <= cfg.tol in every row.
    """
    target = np.asarray(target, dtype=float)
    z = np.zeros_like(target) if x0 is None else np.array(x0, dtype=float)
    step = m / (M * M)
    r = F(z) - target
    for _ in range(cfg.max_iter):
        rnorm = _row_norm(r)
        done = rnorm <= cfg.tol
        if np.all(done):
            return z
        if jac is not None:
            dz = _newton_step(jac(z), r)
            if dz is not None:
                z_newton = z - dz
                r_newton = F(z_newton) - target
                better = _row_norm(r_newton) < rnorm
                if np.all(better | done):
                    z = np.where(done[..., None], z, z_newton)
                    r = np.where(done[..., None], r, r_newton)
                    continue
                z_next = np.where(better[..., None], z_newton, z - step * r)
                z = np.where(done[..., None], z, z_next)
                r = F(z) - target
                continue
        z = np.where(done[..., None], z, z - step * r)
        r = F(z) - target
    raise NoConvergence(
        "monotone inversion did not reach tolerance; the declared (m, M) "
        "are likely wrong for this flux"
    )


def invert_flux(P, x, y, u, v, cfg=DEFAULT_INVERSION, initial=None):
    """Invert the flux: return p with a(x, y, u, p) = v up to cfg.tol.

    Accepts single points or batches (see ProblemSpec); initial is an
    optional warm start of the same shape as v.
    """
    x, y, u, v, single = broadcast_args(P.n, x, y, u, v)
    if np.any(np.linalg.norm(u, axis=-1) > P.radius):
        raise OutOfDomain(f"||u|| exceeds the declared radius {P.radius}")
    x0 = None
    if initial is not None:
        x0 = np.broadcast_to(np.atleast_2d(np.asarray(initial, dtype=float)), v.shape)
    p = invert_monotone(
        lambda z: P.a(x, y, u, z),
        v,
        P.m,
        P.M,
        x0=x0,
        jac=lambda z: P.da_dp(x, y, u, z),
        cfg=cfg,
    )
    return p[0] if single else p


def b_derivatives(P, x, y, u, v, cfg=DEFAULT_INVERSION):
    """Partial derivatives of the inverse flux b(x, y, u, v) in u and v.

    By implicit differentiation at p = b(x, y, u, v):
        db_dv = (da_dp)^-1,   db_du = -(da_dp)^-1 da_du.
    """
    xb, yb, ub, vb, single = broadcast_args(P.n, x, y, u, v)
    p = invert_flux(P, xb, yb, ub, vb, cfg=cfg)
    J = P.da_dp(xb, yb, ub, p)
    try:
        db_dv = np.linalg.inv(J)
    except np.linalg.LinAlgError:
        raise SingularJacobian("da_dp is singular at the inverted point") from None
    db_du = -db_dv @ P.da_du(xb, yb, ub, p)
    if single:
        return db_du[0], db_dv[0]
    return db_du, db_dv

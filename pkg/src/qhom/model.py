"""Problem data model: quasilinear systems a(x, x/eps, u, u')' = f(x, x/eps, u, u')
with a 1-periodic fast variable, plus grid functions, boundary conditions and
the built-in problem registry.
"""

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .errors import DimensionError, NotFound

Evaluator = Callable[..., np.ndarray]


def broadcast_args(n, x, y, u, p):
    """Normalize evaluator arguments to batch form (B,), (B,), (B, n), (B, n).

    Accepts scalars/(n,)-vectors for a single point or (B,)/(B, n) arrays for
    a batch; everything is broadcast to a common B.  Returns the normalized
    arrays plus a flag telling whether the call was single-point.
    """
    u = np.asarray(u, dtype=float)
    p = np.asarray(p, dtype=float)
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    single = u.ndim <= 1 and p.ndim <= 1 and x.ndim == 0 and y.ndim == 0
    if u.ndim <= 1:
        u = np.atleast_1d(u)[None, :]
    if p.ndim <= 1:
        p = np.atleast_1d(p)[None, :]
    if u.shape[1] != n or p.shape[1] != n:
        raise DimensionError(f"expected vectors of length {n}, got {u.shape[1]} and {p.shape[1]}")
    B = max(u.shape[0], p.shape[0], x.size if x.ndim else 1, y.size if y.ndim else 1)
    u = np.broadcast_to(u, (B, n))
    p = np.broadcast_to(p, (B, n))
    x = np.broadcast_to(x, (B,)) if x.ndim == 0 else x
    y = np.broadcast_to(y, (B,)) if y.ndim == 0 else y
    if x.shape != (B,) or y.shape != (B,):
        raise DimensionError("x and y must be scalars or arrays matching the batch size")
    return x, y, u, p, single


@dataclass(frozen=True)
class ProblemSpec:
    """Data of one quasilinear problem.

    The evaluators take (x, y, u, p) with x, y scalars or (B,) arrays and
    u, p of shape (n,) or (B, n); they broadcast over the leading axis, are
    pure, and a, f are 1-periodic in y.  m and M are the strong-monotonicity
    and Lipschitz constants of a(x, y, u, .), valid on ||u|| <= radius.
    da_dx, df_dx are present only when the data is differentiable in the
    slow variable (the regime with a first-order convergence rate).
    """

    name: str
    n: int
    a: Evaluator
    f: Evaluator
    da_du: Evaluator
    da_dp: Evaluator
    df_du: Evaluator
    df_dp: Evaluator
    m: float
    M: float
    radius: float
    da_dx: Optional[Evaluator] = None
    df_dx: Optional[Evaluator] = None

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("system dimension must be positive")
        if not 0.0 < self.m <= self.M:
            raise ValueError("need 0 < m <= M")
        if self.radius <= 0.0:
            raise ValueError("radius must be positive")

    @property
    def has_x_derivatives(self):
        return self.da_dx is not None and self.df_dx is not None


@dataclass(frozen=True)
class GridFunction:
    """R^n-valued function sampled at the uniform nodes x_i = i/N of [0, 1]."""

    values: np.ndarray  # (N+1, n)

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.ndim == 1:
            v = v[:, None]
        if v.ndim != 2 or v.shape[0] < 2:
            raise ValueError("values must have shape (N+1, n) with N >= 1")
        if not np.all(np.isfinite(v)):
            raise ValueError("grid values must be finite")
        v = v.copy()
        v.flags.writeable = False
        object.__setattr__(self, "values", v)

    @property
    def N(self):
        return self.values.shape[0] - 1

    @property
    def n(self):
        return self.values.shape[1]

    def nodes(self):
        return np.linspace(0.0, 1.0, self.N + 1)

    def sup_norm(self):
        return float(np.linalg.norm(self.values, axis=1).max())

    def __call__(self, x):
        """Piecewise-linear interpolation; exact at the nodes."""
        x = np.asarray(x, dtype=float)
        xs = self.nodes()
        cols = [np.interp(x, xs, self.values[:, c]) for c in range(self.n)]
        return np.stack(cols, axis=-1)


def sup_distance(g, h):
    """Maximum nodal distance of two grid functions.

    When the grids differ, the finer function is restricted to the coarser
    nodes (interpolation, which is the nodal restriction on nested grids).
    """
    if g.n != h.n:
        raise DimensionError(f"dimension mismatch: {g.n} vs {h.n}")
    if g.N == h.N:
        diff = g.values - h.values
    else:
        coarse, fine = (g, h) if g.N < h.N else (h, g)
        diff = coarse.values - fine(coarse.nodes())
    return float(np.linalg.norm(diff, axis=1).max())


@dataclass(frozen=True)
class DirichletNatural:
    """u(0) = 0 with prescribed flux a(1, 1/eps, u(1), u'(1)) = flux_datum.

    flux_datum = 0 is the homogeneous natural condition; the flux is the
    boundary datum that survives homogenization.
    """

    flux_datum: np.ndarray

    def __post_init__(self):
        d = np.atleast_1d(np.asarray(self.flux_datum, dtype=float)).copy()
        d.flags.writeable = False
        object.__setattr__(self, "flux_datum", d)


@dataclass(frozen=True)
class NeumannAt1:
    """u(0) = 0 with prescribed slope u'(1) = slope_datum.

    Internally translated into the flux datum a(1, 1/eps, u(1), slope_datum),
    which couples to the unknown u(1).  With a nonzero datum the family of
    solutions has no limit as eps -> 0.
    """

    slope_datum: np.ndarray

    def __post_init__(self):
        d = np.atleast_1d(np.asarray(self.slope_datum, dtype=float)).copy()
        d.flags.writeable = False
        object.__setattr__(self, "slope_datum", d)


@dataclass(frozen=True)
class TwoDirichlet:
    """u(0) = u(1) = 0; the flux level at x = 1 becomes an extra unknown."""


# ---------------------------------------------------------------------------
# built-in problems

def _const_mat(shape_like, mat):
    """Tile a constant (n, n) matrix over the batch shape of shape_like."""
    s = np.shape(np.asarray(shape_like, dtype=float))
    return np.broadcast_to(mat, s + mat.shape).copy()


def _linear_sin():
    # scalar flux p / (2 + sin 2 pi y); unit right-hand side
    def den(y):
        return 2.0 + np.sin(2.0 * np.pi * np.asarray(y, dtype=float))

    eye = np.eye(1)
    zero = np.zeros((1, 1))
    return ProblemSpec(
        name="linear-sin",
        n=1,
        a=lambda x, y, u, p: np.asarray(p, dtype=float) / den(y)[..., None],
        f=lambda x, y, u, p: np.ones_like(np.asarray(u, dtype=float)),
        da_du=lambda x, y, u, p: _const_mat(y, zero),
        da_dp=lambda x, y, u, p: (1.0 / den(y))[..., None, None] * eye,
        df_du=lambda x, y, u, p: _const_mat(y, zero),
        df_dp=lambda x, y, u, p: _const_mat(y, zero),
        da_dx=lambda x, y, u, p: np.zeros_like(np.asarray(p, dtype=float)),
        df_dx=lambda x, y, u, p: np.zeros_like(np.asarray(p, dtype=float)),
        m=1.0 / 3.0,
        M=1.0,
        radius=10.0,
    )


def _quasilinear_demo(slope_feedback=0.0, name="quasilinear-demo"):
    # flux (2 + sin 2 pi y) p + tanh(p)/2; reaction u + slope_feedback * p
    def den(y):
        return 2.0 + np.sin(2.0 * np.pi * np.asarray(y, dtype=float))

    eye = np.eye(1)
    zero = np.zeros((1, 1))

    def a(x, y, u, p):
        p = np.asarray(p, dtype=float)
        return den(y)[..., None] * p + 0.5 * np.tanh(p)

    def da_dp(x, y, u, p):
        p = np.asarray(p, dtype=float)
        d = den(y)[..., None] + 0.5 / np.cosh(p) ** 2
        return d[..., None] * eye

    def f(x, y, u, p):
        u = np.asarray(u, dtype=float)
        return u + slope_feedback * np.asarray(p, dtype=float)

    return ProblemSpec(
        name=name,
        n=1,
        a=a,
        f=f,
        da_du=lambda x, y, u, p: _const_mat(y, zero),
        da_dp=da_dp,
        df_du=lambda x, y, u, p: _const_mat(y, eye),
        df_dp=lambda x, y, u, p: _const_mat(y, slope_feedback * eye),
        da_dx=lambda x, y, u, p: np.zeros_like(np.asarray(p, dtype=float)),
        df_dx=lambda x, y, u, p: np.zeros_like(np.asarray(p, dtype=float)),
        m=1.0,
        M=3.5,
        radius=2.0,
    )


def _linear_system_2d():
    # a = A(y) p with A(y) = [[2+sin 2pi y, 0.3], [0.3, 2+cos 2pi y]];
    # f = 0.1 p + u.  Extremal eigenvalues of A over y are ~0.9137 / ~3.0863.
    def Amat(y):
        y = np.asarray(y, dtype=float)
        A = np.zeros(y.shape + (2, 2))
        A[..., 0, 0] = 2.0 + np.sin(2.0 * np.pi * y)
        A[..., 0, 1] = 0.3
        A[..., 1, 0] = 0.3
        A[..., 1, 1] = 2.0 + np.cos(2.0 * np.pi * y)
        return A

    eye = np.eye(2)
    zero = np.zeros((2, 2))
    return ProblemSpec(
        name="linear-system-2d",
        n=2,
        a=lambda x, y, u, p: np.einsum("...ij,...j->...i", Amat(y), np.asarray(p, dtype=float)),
        f=lambda x, y, u, p: 0.1 * np.asarray(p, dtype=float) + np.asarray(u, dtype=float),
        da_du=lambda x, y, u, p: _const_mat(y, zero),
        da_dp=lambda x, y, u, p: Amat(y),
        df_du=lambda x, y, u, p: _const_mat(y, eye),
        df_dp=lambda x, y, u, p: _const_mat(y, 0.1 * eye),
        da_dx=lambda x, y, u, p: np.zeros_like(np.asarray(p, dtype=float)),
        df_dx=lambda x, y, u, p: np.zeros_like(np.asarray(p, dtype=float)),
        m=0.9,
        M=3.1,
        radius=10.0,
    )


def _degenerate_fixture():
    # a = p, f = -pi^2 u: the two-Dirichlet linearization has kernel sin(pi x)
    eye = np.eye(1)
    zero = np.zeros((1, 1))
    return ProblemSpec(
        name="degenerate-fixture",
        n=1,
        a=lambda x, y, u, p: np.asarray(p, dtype=float).copy(),
        f=lambda x, y, u, p: -np.pi ** 2 * np.asarray(u, dtype=float),
        da_du=lambda x, y, u, p: _const_mat(y, zero),
        da_dp=lambda x, y, u, p: _const_mat(y, eye),
        df_du=lambda x, y, u, p: _const_mat(y, -np.pi ** 2 * eye),
        df_dp=lambda x, y, u, p: _const_mat(y, zero),
        da_dx=lambda x, y, u, p: np.zeros_like(np.asarray(p, dtype=float)),
        df_dx=lambda x, y, u, p: np.zeros_like(np.asarray(p, dtype=float)),
        m=1.0,
        M=1.0,
        radius=10.0,
    )


_REGISTRY = {
    "linear-sin": _linear_sin,
    "quasilinear-demo": _quasilinear_demo,
    # variant with reaction u + 3 u', for the explicit sufficient condition
    "quasilinear-demo-up": lambda: _quasilinear_demo(3.0, "quasilinear-demo-up"),
    "linear-system-2d": _linear_system_2d,
    "degenerate-fixture": _degenerate_fixture,
}

REGISTRY_NAMES = tuple(sorted(_REGISTRY))


def registry_get(name):
    """Return a built-in ProblemSpec by name."""
    try:
        builder = _REGISTRY[name]
    except KeyError:
        raise NotFound(f"unknown problem {name!r}; available: {', '.join(REGISTRY_NAMES)}") from None
    return builder()

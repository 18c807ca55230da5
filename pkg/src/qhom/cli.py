"""Command-line front end: single solves, eps-sweeps, nondegeneracy checks.

Data files are CSV with a fixed schema and 17 significant digits, written
deterministically (no timestamps); run metadata goes to a JSON sidecar next
to the CSV, and a rendered figure is saved alongside unless --no-plot.

Exit codes: 0 success / converged / nondegenerate, 1 degenerate, 2 solver
failure, 3 bad arguments (including an unresolved-oscillation grid).
"""

import argparse
import json
import math
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import __version__
from .analysis import check_nondegenerate, rate_fit, sufficient_condition
from .bvp import (HOMOGENIZED, SolverConfig, grid_size_for, solve_eps,
                  solve_homogenized)
from .errors import (InvalidSample, NoConvergence, NotFound, OutOfDomain,
                     QhomError, UnresolvedOscillation)
from .homogenize import build_homogenized
from .model import (DirichletNatural, NeumannAt1, TwoDirichlet, registry_get,
                    sup_distance)
from .monotone import InversionConfig


@dataclass(frozen=True)
class SweepRow:
    """One eps entry of a sweep: errors against the homogenized solution."""

    eps: float
    err_inf: float
    err_boundary: float
    iterations: int
    N: int
    converged: bool

    def __post_init__(self):
        if self.converged:
            # the boundary node is one of the sup-norm candidates
            assert self.err_inf >= self.err_boundary - 1e-300


class _ArgumentError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits with code 2 on bad usage; the CLI contract wants 3
    def error(self, message):
        raise _ArgumentError(message)


def parse_bc(spec, n):
    """Parse a boundary-condition string: dn | dn:c1,..,cn | neumann:c1,..,cn | dd."""
    head, _, rest = spec.partition(":")
    if head == "dn":
        datum = _parse_vector(rest, n) if rest else np.zeros(n)
        return DirichletNatural(datum)
    if head == "neumann":
        if not rest:
            raise _ArgumentError("neumann needs a slope datum, e.g. neumann:1")
        return NeumannAt1(_parse_vector(rest, n))
    if head == "dd":
        if rest:
            raise _ArgumentError("dd takes no datum")
        return TwoDirichlet()
    raise _ArgumentError(f"unknown boundary condition {spec!r}")


def _parse_vector(text, n):
    try:
        vals = [float(t) for t in text.split(",")]
    except ValueError:
        raise _ArgumentError(f"bad vector {text!r}") from None
    if len(vals) != n:
        raise _ArgumentError(f"datum needs {n} component(s), got {len(vals)}")
    return np.array(vals)


def _parse_eps(text):
    if text == "homogenized":
        return HOMOGENIZED
    try:
        eps = float(text)
    except ValueError:
        raise _ArgumentError(f"eps must be a number or 'homogenized', got {text!r}") from None
    if not eps > 0.0:
        raise _ArgumentError("eps must be positive")
    return eps


def _fmt(x):
    return f"{x:.17g}"


def _write_csv(path, header, rows, trailer=()):
    lines = [",".join(header)]
    lines += [",".join(row) for row in rows]
    lines += list(trailer)
    Path(path).write_text("\n".join(lines) + "\n")


def _write_sidecar(path, meta):
    side = Path(str(path) + ".meta.json")
    side.write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")
    return side


def _figure_path(out):
    return Path(out).with_suffix(".png")


def cmd_solve(args):
    P = registry_get(args.problem)
    bc = parse_bc(args.bc, P.n)
    eps = _parse_eps(args.eps)
    N = args.N if args.N is not None else grid_size_for(eps, args.nodes_per_period)
    cfg = SolverConfig(N=N, picard_tol=args.tol, mode=args.mode,
                       nodes_per_period=args.nodes_per_period)
    inv = InversionConfig(tol=min(1e-12, args.tol))
    out = Path(args.out if args.out else f"{args.problem}-solve.csv")

    code = 0
    try:
        report = solve_eps(P, eps, bc, cfg, inversion=inv, K=args.K)
    except (NoConvergence, OutOfDomain) as exc:
        report = exc.report
        code = 2
        print(f"solver failure: {exc}", file=sys.stderr)
        if report is None:
            return code

    header = ["x"] + [f"u_{c + 1}" for c in range(P.n)] + [f"v_{c + 1}" for c in range(P.n)]
    xs = report.u.nodes()
    rows = [
        [_fmt(xs[i])] + [_fmt(t) for t in report.u.values[i]] + [_fmt(t) for t in report.v.values[i]]
        for i in range(N + 1)
    ]
    _write_csv(out, header, rows)
    meta = {
        "command": "solve",
        "problem": args.problem,
        "eps": "homogenized" if math.isinf(eps) else eps,
        "bc": args.bc,
        "N": N,
        "mode": args.mode,
        "tol": args.tol,
        "nodes_per_period": args.nodes_per_period,
        "K": args.K,
        "converged": report.converged,
        "iterations": report.iterations,
        "final_residual": report.residual_history[-1] if report.residual_history else None,
        "w": None if report.w is None else list(report.w),
        "version": __version__,
    }
    _write_sidecar(out, meta)
    print(f"wrote {out} (converged={report.converged}, iterations={report.iterations})")
    if not args.no_plot:
        from .plotting import solution_figure

        title = f"{args.problem}, eps={meta['eps']}, bc={args.bc}"
        print(f"wrote {solution_figure(report, _figure_path(out), title)}")
    return code


def cmd_sweep(args):
    P = registry_get(args.problem)
    bc = parse_bc(args.bc, P.n)
    eps_list = [_parse_eps(t) for t in args.eps]
    if any(math.isinf(e) for e in eps_list):
        raise _ArgumentError("sweep eps values must be finite")
    if any(e2 >= e1 for e1, e2 in zip(eps_list, eps_list[1:])):
        raise _ArgumentError("eps list must be strictly decreasing")
    out = Path(args.out if args.out else f"{args.problem}-sweep.csv")
    inv = InversionConfig(tol=min(1e-12, args.tol))
    coeffs = build_homogenized(P, args.K, inv)

    rows = []
    for eps in eps_list:
        N = args.N if args.N is not None else grid_size_for(eps, args.nodes_per_period)
        cfg = SolverConfig(N=N, picard_tol=args.tol, mode=args.mode,
                           nodes_per_period=args.nodes_per_period)
        try:
            hom = solve_homogenized(P, bc, cfg, coeffs=coeffs, inversion=inv)
            rep = solve_eps(P, eps, bc, cfg, initial=_initial_from(hom, bc),
                            coeffs=coeffs, inversion=inv)
            err_inf = sup_distance(rep.u, hom.u)
            err_boundary = float(np.linalg.norm(rep.u.values[-1] - hom.u.values[-1]))
            rows.append(SweepRow(eps, err_inf, err_boundary, rep.iterations, N, True))
        except (NoConvergence, OutOfDomain) as exc:
            print(f"eps={eps}: solver failure: {exc}", file=sys.stderr)
            rows.append(SweepRow(eps, float("nan"), float("nan"), 0, N, False))

    ok = [r for r in rows if r.converged and r.err_inf > 0.0]
    fit = None
    if len(ok) >= 3:
        try:
            fit = rate_fit([(r.eps, r.err_inf) for r in ok])
        except InvalidSample:
            fit = None

    trailer = []
    if fit is not None:
        trailer.append(f"# rate_fit p={_fmt(fit.p)} C={_fmt(fit.C)} r2={_fmt(fit.r2)}")
    else:
        trailer.append("# rate_fit unavailable")
    if args.problem == "linear-sin":
        for r in ok:
            ratio = r.err_boundary / (r.eps / (2.0 * np.pi))
            trailer.append(f"# boundary_ratio eps={_fmt(r.eps)} ratio={_fmt(ratio)}")

    header = ["eps", "err_inf", "err_boundary", "iterations", "N", "converged"]
    csv_rows = [
        [_fmt(r.eps), _fmt(r.err_inf), _fmt(r.err_boundary), str(r.iterations),
         str(r.N), "true" if r.converged else "false"]
        for r in rows
    ]
    _write_csv(out, header, csv_rows, trailer)
    meta = {
        "command": "sweep",
        "problem": args.problem,
        "bc": args.bc,
        "eps": eps_list,
        "mode": args.mode,
        "tol": args.tol,
        "nodes_per_period": args.nodes_per_period,
        "K": args.K,
        "converged_rows": sum(r.converged for r in rows),
        "rate_fit": None if fit is None else {"p": fit.p, "C": fit.C, "r2": fit.r2},
        "version": __version__,
    }
    _write_sidecar(out, meta)
    for line in trailer:
        print(line.lstrip("# "))
    print(f"wrote {out} ({sum(r.converged for r in rows)}/{len(rows)} rows converged)")
    if not args.no_plot:
        from .plotting import sweep_figure

        title = f"{args.problem}, bc={args.bc}"
        print(f"wrote {sweep_figure(rows, fit, _figure_path(out), title)}")
    return 0 if sum(r.converged for r in rows) >= 3 else 2


def _initial_from(hom, bc):
    if isinstance(bc, TwoDirichlet):
        return (hom.u, hom.v, hom.w)
    return (hom.u, hom.v)


def cmd_check(args):
    P = registry_get(args.problem)
    bc = parse_bc(args.bc, P.n)
    inv = InversionConfig(tol=min(1e-12, args.tol))
    cfg = SolverConfig(N=args.N if args.N is not None else 64, picard_tol=args.tol)
    coeffs = build_homogenized(P, args.K, inv)
    try:
        hom = solve_homogenized(P, bc, cfg, coeffs=coeffs, inversion=inv)
    except (NoConvergence, OutOfDomain) as exc:
        print(f"homogenized solve failed: {exc}", file=sys.stderr)
        return 2
    sigma, ok = check_nondegenerate(P, coeffs, hom.u, hom.v, bc, N=cfg.N, inversion=inv)
    suff = sufficient_condition(P, coeffs, hom.u, hom.v)
    print(f"sigma_min = {sigma:.6e}")
    print(f"nondegenerate: {'yes' if ok else 'no'}")
    print(f"sufficient condition: {'holds' if suff else 'does not hold'}")
    return 0 if ok else 1


def build_parser():
    parser = _Parser(prog="qhom",
                     description="Homogenization toolkit for quasilinear "
                                 "second-order ODE systems in divergence form.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, with_mode=True):
        p.add_argument("--N", type=int, default=None, help="grid subintervals")
        p.add_argument("--tol", type=float, default=1e-10, help="residual tolerance")
        p.add_argument("--nodes-per-period", dest="nodes_per_period", type=int, default=16)
        p.add_argument("--K", type=int, default=128, help="cell quadrature nodes")
        if with_mode:
            p.add_argument("--mode", choices=["picard", "frozen"], default="picard")
        p.add_argument("--out", default=None, help="output CSV path")
        p.add_argument("--no-plot", dest="no_plot", action="store_true",
                       help="skip the figure next to the CSV")

    p_solve = sub.add_parser("solve", help="solve one problem instance")
    p_solve.add_argument("problem")
    p_solve.add_argument("eps", help="positive number or 'homogenized'")
    p_solve.add_argument("bc", help="dn | dn:c1,..,cn | neumann:c1,..,cn | dd")
    common(p_solve)
    p_solve.set_defaults(func=cmd_solve)

    p_sweep = sub.add_parser("sweep", help="eps-sweep against the homogenized solution")
    p_sweep.add_argument("problem")
    p_sweep.add_argument("bc")
    p_sweep.add_argument("eps", nargs="+", help="strictly decreasing eps values")
    common(p_sweep)
    p_sweep.set_defaults(func=cmd_sweep)

    p_check = sub.add_parser("check", help="nondegeneracy check of the homogenized solution")
    p_check.add_argument("problem")
    p_check.add_argument("bc")
    p_check.add_argument("--N", type=int, default=None)
    p_check.add_argument("--tol", type=float, default=1e-10)
    p_check.add_argument("--K", type=int, default=128)
    p_check.set_defaults(func=cmd_check)

    return parser


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except _ArgumentError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except (NotFound, UnresolvedOscillation, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except NoConvergence as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return 2
    except QhomError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())

"""Figure rendering for solve and sweep reports (written next to the CSV)."""

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np


def solution_figure(report, path, title=None):
    """Plot the solution pair (u solid, v dashed) against x and save to path."""
    x = report.u.nodes()
    fig, ax = plt.subplots(figsize=(7.0, 4.5))
    for c in range(report.u.n):
        label = "u" if report.u.n == 1 else f"u_{c + 1}"
        ax.plot(x, report.u.values[:, c], lw=1.8, label=label)
    for c in range(report.v.n):
        label = "v" if report.v.n == 1 else f"v_{c + 1}"
        ax.plot(x, report.v.values[:, c], lw=1.2, ls="--", label=label)
    ax.set_xlabel("x")
    ax.grid(alpha=0.3)
    ax.legend(loc="best", fontsize=9)
    if title:
        ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def sweep_figure(rows, fit, path, title=None):
    """Log-log error-versus-eps plot for converged sweep rows; overlays the
    fitted power law and a first-order reference slope."""
    ok = [r for r in rows if r.converged and r.err_inf > 0.0]
    fig, ax = plt.subplots(figsize=(6.5, 4.5))
    if ok:
        eps = np.array([r.eps for r in ok])
        ax.loglog(eps, [r.err_inf for r in ok], "o-", lw=1.5, label="sup error")
        eb = np.array([r.err_boundary for r in ok])
        if np.all(eb > 0.0):
            ax.loglog(eps, eb, "s--", lw=1.2, label="boundary error")
        if fit is not None:
            ax.loglog(eps, fit.C * eps ** fit.p, "k:", lw=1.0,
                      label=f"fit: {fit.C:.3g} eps^{fit.p:.3f}")
        ref = ok[0].err_inf / ok[0].eps
        ax.loglog(eps, ref * eps, color="gray", lw=0.8, alpha=0.6, label="slope 1")
        ax.invert_xaxis()
    ax.set_xlabel("eps")
    ax.set_ylabel("error")
    ax.grid(which="both", alpha=0.3)
    ax.legend(loc="best", fontsize=9)
    if title:
        ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path

"""Static figures for monitor series and field snapshots (Agg backend)."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

PANELS = (
    ("c_max", "max c"),
    ("n_mass", "bacterial mass"),
    ("weighted_energy", "weighted energy"),
    ("omega_l2", "|omega|_2"),
    ("u_l2", "|u|_2"),
    ("gronwall_residual", "Gronwall residual"),
)


def plot_monitors(series, path):
    """Six-panel time history of the main monitors."""
    t = series.column("t")
    fig, axes = plt.subplots(2, 3, figsize=(12, 6), constrained_layout=True)
    for ax, (col, label) in zip(axes.flat, PANELS):
        v = series.column(col)
        ax.plot(t, v, lw=1.2)
        if col == "c_max":
            bound = series.column("c_bound")
            ax.plot(t, bound, "k--", lw=0.8, label="bound")
            ax.legend(loc="best", fontsize=8)
        ax.set_title(label, fontsize=10)
        ax.set_xlabel("t")
        ax.ticklabel_format(axis="y", useOffset=False, style="sci", scilimits=(-3, 3))
    fig.savefig(path, dpi=110)
    plt.close(fig)
    return path


def plot_fields(state, path):
    """Heat maps of n, c and vorticity at the given state."""
    grid = state.n.grid
    ext = (0, grid.Lx, 0, grid.Ly)
    fig, axes = plt.subplots(1, 3, figsize=(13, 4), constrained_layout=True)
    for ax, (f, label) in zip(axes, ((state.n, "n"), (state.c, "c"), (state.flow.omega, "omega"))):
        im = ax.imshow(np.asarray(f.interior).T, origin="lower", extent=ext, cmap="viridis", aspect="auto")
        fig.colorbar(im, ax=ax, shrink=0.85)
        ax.set_title(f"{label}  (t = {state.t:.4g})", fontsize=10)
    fig.savefig(path, dpi=110)
    plt.close(fig)
    return path

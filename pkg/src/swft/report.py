"""Figure rendering for run products.

All figures are written straight to files with the Agg backend, next to
the delimited output, so a headless run leaves a browsable record:
per-snapshot field maps, a diagnostics time-series page, and error maps
for the steady-profile comparison.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)
import matplotlib.tri as mtri  # noqa: E402
import numpy as np  # noqa: E402

from .state import primitive_from_conserved  # noqa: E402


def _triangulation(mesh) -> mtri.Triangulation:
    return mtri.Triangulation(
        mesh.vertices[:, 0], mesh.vertices[:, 1], triangles=mesh.cells
    )


def _cell_map(ax, tri, values, label, cmap="viridis"):
    pc = ax.tripcolor(tri, facecolors=np.asarray(values, dtype=float), cmap=cmap)
    ax.set_aspect("equal")
    ax.set_title(label, fontsize=10)
    return pc


def render_snapshot_figure(U, mesh, bathy, p, t, path) -> None:
    """Four-panel cell map of depth, surface, concentration, and speed."""
    prim = primitive_from_conserved(U, p, z=bathy.cell)
    tri = _triangulation(mesh)
    fig, axes = plt.subplots(2, 2, figsize=(11, 7), constrained_layout=True)
    panels = (
        (prim.h, "depth h [m]", "viridis"),
        (prim.w, "surface w = h + Z [m]", "cividis"),
        (prim.c, "concentration c [-]", "plasma"),
        (np.hypot(prim.u, prim.v), "speed [m/s]", "magma"),
    )
    for ax, (field, label, cmap) in zip(axes.ravel(), panels):
        pc = _cell_map(ax, tri, field, label, cmap)
        fig.colorbar(pc, ax=ax, shrink=0.85)
    fig.suptitle(f"t = {t:g} s", fontsize=12)
    fig.savefig(path, dpi=130)
    plt.close(fig)


def render_diagnostics_figure(diagnostics, path) -> None:
    """Time series of conservation drift, peak speed, and minimum depth."""
    t = np.asarray(diagnostics["t"])
    mass = np.asarray(diagnostics["mass"])
    solute = np.asarray(diagnostics["solute"])
    fig, axes = plt.subplots(3, 1, figsize=(8, 8), sharex=True,
                             constrained_layout=True)

    ax = axes[0]
    mref = mass[0] if mass[0] != 0 else 1.0
    ax.plot(t, (mass - mass[0]) / mref, label="mass")
    if solute[0] != 0:
        ax.plot(t, (solute - solute[0]) / solute[0], label="solute")
    ax.set_ylabel("relative drift")
    ax.legend(loc="best", fontsize=8)

    axes[1].plot(t, diagnostics["max_speed"], color="tab:red")
    axes[1].set_ylabel("max speed [m/s]")

    axes[2].semilogy(t, np.maximum(np.asarray(diagnostics["min_depth"]), 1e-300))
    axes[2].set_ylabel("min depth [m]")
    axes[2].set_xlabel("t [s]")

    fig.savefig(path, dpi=130)
    plt.close(fig)


def render_steady_error_figure(errors, mesh, path) -> None:
    """Cell maps of the absolute deviations from the steady profile.

    ``errors`` maps a field label to a per-cell absolute error array.
    """
    tri = _triangulation(mesh)
    n = len(errors)
    fig, axes = plt.subplots(1, n, figsize=(5.5 * n, 3.2), constrained_layout=True)
    if n == 1:
        axes = [axes]
    for ax, (label, field) in zip(axes, errors.items()):
        pc = _cell_map(ax, tri, np.abs(field), f"|error| {label}", "inferno")
        fig.colorbar(pc, ax=ax, shrink=0.9)
    fig.savefig(path, dpi=130)
    plt.close(fig)

"""Forward-Euler time integration of the finite-volume semi-discretization.

One step runs the fixed pipeline: limited gradients, midpoint traces,
positivity correction, ghost states, local speeds, the CFL time step,
flux divergence plus topography source, the explicit update, and finally
the implicit friction solve on the updated state.
"""

from __future__ import annotations

import time as _time
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, NumericsError, PositivityError
from .flux import assemble_flux_divergence, compute_edge_speeds
from .mesh import OUTFLOW, WALL, TriMesh
from .reconstruction import (
    evaluate_midpoint_states,
    green_gauss_gradients,
    minmod_limit,
    positivity_correct,
)
from .sources import friction_implicit_update, topography_source
from .state import Bathymetry, PhysParams, primitive_from_conserved

# Cell averages this far below zero are treated as round-off and reset to
# a dry cell; anything lower aborts the run.
NEGATIVE_TOL = 1e-12


def compute_dt(speeds, mesh: TriMesh, p: PhysParams, dt_max: float = 1.0) -> float:
    """Stable time step from the current local speeds.

    The base bound is ``(1/6) * min height / max speed`` over all cell
    sides; ``p.cfl`` either multiplies that bound (default) or replaces
    the 1/6 factor, depending on ``p.cfl_mode``.  When nothing moves
    (all speeds below 1e-14) the configured ``dt_max`` is used.
    """
    amax = speeds.max_speed()
    if amax < 1e-14:
        return float(dt_max)
    factor = p.cfl / 6.0 if p.cfl_mode == "multiply" else p.cfl
    return float(factor * mesh.min_height() / amax)


def ghost_state(U, normal, tag):
    """Exterior trace for a boundary side given the interior trace.

    Outflow copies the interior state (zero-gradient).  Wall keeps mass
    and solute and reflects the momentum: the component along the outward
    normal is negated, the tangential one kept, giving zero normal mass
    flux through the side.
    """
    U = np.asarray(U, dtype=np.float64)
    single = U.ndim == 1
    q = U.reshape(-1, 4).copy()
    nrm = np.asarray(normal, dtype=np.float64).reshape(-1, 2)
    tags = np.broadcast_to(np.asarray(tag, dtype=np.int64).reshape(-1), (q.shape[0],))
    wall = tags == WALL
    if wall.any():
        nx = nrm[wall, 0]
        ny = nrm[wall, 1]
        qn = q[wall, 1] * nx + q[wall, 2] * ny
        q[wall, 1] -= 2.0 * qn * nx
        q[wall, 2] -= 2.0 * qn * ny
    return q[0] if single else q.reshape(U.shape)


def apply_boundary_conditions(ms, mesh: TriMesh) -> None:
    """Fill the outer traces of boundary sides in place.

    The trace evaluation already seeds ``outer`` with a copy of ``inner``,
    which is exactly the outflow ghost; wall sides get their momentum
    reflected here.
    """
    bidx = np.flatnonzero(mesh.is_boundary[mesh.side_cell, mesh.side_slot])
    cells = mesh.side_cell[bidx]
    slots = mesh.side_slot[bidx]
    tags = mesh.boundary_tag[cells, slots]
    wall = tags == WALL
    if not wall.any():
        return
    c = cells[wall]
    k = slots[wall]
    nx = mesh.normal[c, k, 0]
    ny = mesh.normal[c, k, 1]
    q2 = ms.outer[c, k, 1]
    q3 = ms.outer[c, k, 2]
    qn = q2 * nx + q3 * ny
    ms.outer[c, k, 1] = q2 - 2.0 * qn * nx
    ms.outer[c, k, 2] = q3 - 2.0 * qn * ny


def check_boundary_tags(mesh: TriMesh) -> None:
    """Reject meshes whose boundary sides are not fully tagged."""
    j, k = np.nonzero(mesh.neighbor < 0)
    tags = mesh.boundary_tag[j, k]
    bad = (tags != WALL) & (tags != OUTFLOW)
    if bad.any():
        i = int(np.argmax(bad))
        mx, my = mesh.midpoint[j[i], k[i]]
        raise ConfigError(
            f"untagged boundary side at midpoint ({mx:.6g}, {my:.6g}); "
            "run classify_boundaries first"
        )


def _post_step_clamp(U: np.ndarray, p: PhysParams, t: float) -> None:
    """Zero out round-off negatives; abort on anything larger."""
    q4min = U[:, 3].min()
    if q4min < -NEGATIVE_TOL:
        j = int(np.argmin(U[:, 3]))
        raise PositivityError(
            f"negative solute average {q4min:.3e} in cell {j} at t={t:.6g}"
        )
    if q4min < 0.0:
        np.maximum(U[:, 3], 0.0, out=U[:, 3])
    depth = U[:, 0] - p.delta * U[:, 3]
    hmin = depth.min()
    if hmin < -NEGATIVE_TOL:
        j = int(np.argmin(depth))
        raise PositivityError(
            f"negative depth average {hmin:.3e} in cell {j} at t={t:.6g}"
        )
    if hmin < 0.0:
        U[depth < 0.0] = 0.0


def step_forward_euler(U, mesh: TriMesh, bathy: Bathymetry, p: PhysParams,
                       dt_max: float = 1.0, dt_limit: float | None = None,
                       t: float = 0.0):
    """Advance the cell averages by one step; returns ``(U_new, dt)``.

    ``dt_limit`` caps the CFL step (used to land exactly on snapshot and
    end times).  ``t`` only labels error messages.
    """
    prim = primitive_from_conserved(U, p)
    grads = minmod_limit(green_gauss_gradients(U, mesh), mesh)
    ms = evaluate_midpoint_states(U, grads, mesh)
    ms = positivity_correct(ms, U, p, mesh)
    apply_boundary_conditions(ms, mesh)

    speeds = compute_edge_speeds(ms, mesh, p)
    dt = compute_dt(speeds, mesh, p, dt_max)
    if dt_limit is not None and dt_limit < dt:
        dt = float(dt_limit)

    rhs = assemble_flux_divergence(ms, speeds, mesh, p)
    depth = U[:, 0] - p.delta * U[:, 3]
    depth_grad = minmod_limit(green_gauss_gradients(depth, mesh), mesh)[:, 0, :]
    rhs += topography_source(ms, depth_grad, prim, bathy, mesh, p)

    U_new = U + dt * rhs
    U_new = friction_implicit_update(U_new, dt, p)
    _post_step_clamp(U_new, p, t)
    return U_new, dt


def error_norms(computed, reference, mesh: TriMesh):
    """Area-weighted (L1, L2, Linf) norms of ``computed - reference``.

    L1 and L2 are normalized by the total area so a uniform offset of
    size d yields exactly (d, d, d); ``reference`` may be a scalar.
    """
    computed = np.asarray(computed, dtype=np.float64)
    reference = np.asarray(reference, dtype=np.float64)
    if reference.ndim and reference.shape != computed.shape:
        raise ValueError(
            f"field shapes differ: {computed.shape} vs {reference.shape}"
        )
    if computed.shape != (mesh.n_cells,):
        raise ValueError(f"expected {mesh.n_cells} cell values, got {computed.shape}")
    e = np.abs(computed - reference)
    w = mesh.area
    total = w.sum()
    l1 = float((w * e).sum() / total)
    l2 = float(np.sqrt((w * e * e).sum() / total))
    linf = float(e.max())
    return l1, l2, linf


@dataclass
class RunSetup:
    """Everything the integrator needs, fully materialized."""

    name: str
    mesh: TriMesh
    bathy: Bathymetry
    params: PhysParams
    U0: np.ndarray
    t_end: float
    snapshot_times: tuple = ()
    dt_max: float = 1.0


@dataclass
class RunResult:
    """Final state, snapshots, and per-step diagnostic series of one run."""

    setup: RunSetup
    U: np.ndarray
    t: float
    n_steps: int
    snapshots: list = field(default_factory=list)   # [(t, U copy), ...]
    diagnostics: dict = field(default_factory=dict)  # name -> np.ndarray
    wall_time: float = 0.0

    def snapshot_at(self, t: float, tol: float = 1e-9) -> np.ndarray:
        for ts, U in self.snapshots:
            if abs(ts - t) <= tol:
                return U
        raise KeyError(f"no snapshot at t={t}")


def _state_diagnostics(U, mesh, p):
    prim = primitive_from_conserved(U, p)
    mass = float((mesh.area * U[:, 0]).sum())
    solute = float((mesh.area * U[:, 3]).sum())
    return mass, solute, float(prim.speed().max()), float(prim.h.min())


def run(setup: RunSetup, progress=None) -> RunResult:
    """Integrate a prepared setup to its end time.

    Snapshots are taken at t = 0, at every requested snapshot time (the
    step is clipped to land on them exactly), and at the end time.
    Diagnostics (mass, solute, max speed, min depth) are recorded every
    step; a non-finite state aborts with the step number.
    """
    check_boundary_tags(setup.mesh)
    p = setup.params.resolved(setup.mesh)
    mesh = setup.mesh
    U = np.array(setup.U0, dtype=np.float64)
    if U.shape != (mesh.n_cells, 4):
        raise ConfigError(f"initial state must have shape ({mesh.n_cells}, 4)")

    t_end = float(setup.t_end)
    events = sorted({float(ts) for ts in setup.snapshot_times
                     if 0.0 < ts <= t_end + 1e-12} | ({t_end} if t_end > 0 else set()))

    series = {k: [] for k in ("t", "dt", "mass", "solute", "max_speed", "min_depth")}

    def record(t, dt):
        mass, solute, vmax, hmin = _state_diagnostics(U, mesh, p)
        series["t"].append(t)
        series["dt"].append(dt)
        series["mass"].append(mass)
        series["solute"].append(solute)
        series["max_speed"].append(vmax)
        series["min_depth"].append(hmin)

    started = _time.perf_counter()
    record(0.0, 0.0)
    snapshots = [(0.0, U.copy())]

    t = 0.0
    n_steps = 0
    for event in events:
        while t < event - 1e-12:
            U, dt = step_forward_euler(
                U, mesh, setup.bathy, p,
                dt_max=setup.dt_max, dt_limit=event - t, t=t,
            )
            t = event if event - t <= dt * (1.0 + 1e-12) else t + dt
            n_steps += 1
            if not np.isfinite(U).all():
                raise NumericsError(f"non-finite state after step {n_steps} (t={t:.6g})")
            record(t, dt)
            if progress is not None:
                progress(t, n_steps)
        snapshots.append((t, U.copy()))

    diagnostics = {k: np.asarray(v) for k, v in series.items()}
    return RunResult(
        setup=setup, U=U, t=t, n_steps=n_steps, snapshots=snapshots,
        diagnostics=diagnostics, wall_time=_time.perf_counter() - started,
    )

"""Built-in benchmark scenarios and their materialization into run setups.

A :class:`Scenario` is a declarative description (mesh recipe, bottom,
physics, region-wise initial data, boundary rules, run controls);
:func:`build_scenario` turns it into the concrete mesh, bathymetry and
initial cell averages the integrator consumes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError
from .mesh import (
    TriMesh,
    build_structured_mesh,
    classify_boundaries,
    jitter_mesh,
    load_mesh_text,
)
from .simulation import RunSetup
from .sources import SteadyProfile, make_steady_profile
from .state import PhysParams, build_bathymetry, conserved_from_primitive

SCENARIO_NAMES = ("example1", "example2", "lake_at_rest", "steady_custom")


@dataclass(frozen=True)
class MeshSpec:
    """Structured-grid recipe (or a mesh file path overriding it)."""

    nx: int = 1
    ny: int = 1
    domain: tuple = (0.0, 1.0, 0.0, 1.0)
    jitter: float = 0.0
    seed: int = 0
    diagonal: str = "same"
    path: str | None = None


@dataclass(frozen=True)
class DamSpec:
    """Internal wall along ``x = x_dam`` with one open breach."""

    x_dam: float
    breach_center: float
    breach_width: float


@dataclass(frozen=True)
class RegionInit:
    """Uniform initial data for one region.

    Exactly one of ``h`` (depth) or ``w`` (surface elevation, depth
    becomes ``max(w - Z, 0)``) must be given.
    """

    h: float | None = None
    w: float | None = None
    u: float = 0.0
    v: float = 0.0
    c: float = 0.0

    def __post_init__(self):
        if (self.h is None) == (self.w is None):
            raise ConfigError("region initial data needs exactly one of h or w")
        if self.h is not None and self.h < 0.0:
            raise ConfigError(f"initial depth must be non-negative, got {self.h}")
        if self.c < 0.0:
            raise ConfigError(f"initial concentration must be non-negative, got {self.c}")


@dataclass(frozen=True)
class InitialSpec:
    """Region-wise initial condition.

    Cells with centroid ``x < x_split`` take ``upstream`` when it is
    present; everything else takes ``default``.
    """

    default: RegionInit
    upstream: RegionInit | None = None
    x_split: float | None = None


@dataclass(frozen=True)
class Scenario:
    """Complete declarative description of one run."""

    name: str
    mesh: MeshSpec
    bathy: tuple
    params: PhysParams
    initial: InitialSpec
    boundary: dict
    t_end: float
    snapshot_times: tuple = ()
    dt_max: float = 1.0
    dam: DamSpec | None = None
    output_dir: str = "out"
    steady: SteadyProfile | None = None  # reference profile, when one exists


def _dam_side_mask(mesh: TriMesh, dam: DamSpec) -> np.ndarray:
    """Interior sides lying on the dam line, outside the breach."""
    (xmin, xmax), (ymin, ymax) = mesh.bbox
    tol = 1e-9 * math.hypot(xmax - xmin, ymax - ymin)
    if not xmin + tol < dam.x_dam < xmax - tol:
        raise ConfigError(f"dam line x={dam.x_dam} outside the domain interior")
    half = 0.5 * dam.breach_width
    if half <= 0 or dam.breach_center - half < ymin - tol or dam.breach_center + half > ymax + tol:
        raise ConfigError("breach must have positive width and fit inside the domain")

    v0 = mesh.vertices[mesh.cells]
    v1 = mesh.vertices[np.roll(mesh.cells, -1, axis=1)]
    on_line = (np.abs(v0[:, :, 0] - dam.x_dam) <= tol) & (
        np.abs(v1[:, :, 0] - dam.x_dam) <= tol
    )
    my = mesh.midpoint[:, :, 1]
    in_breach = np.abs(my - dam.breach_center) < half - tol
    mask = on_line & ~in_breach & (mesh.neighbor >= 0)
    if not mask.any():
        raise ConfigError(
            f"no interior mesh sides lie on the dam line x={dam.x_dam}"
        )
    return mask


def _materialize_initial(init: InitialSpec, mesh: TriMesh, bathy, p: PhysParams) -> np.ndarray:
    nc = mesh.n_cells
    h = np.empty(nc)
    u = np.empty(nc)
    v = np.empty(nc)
    c = np.empty(nc)
    if init.upstream is not None:
        if init.x_split is None:
            raise ConfigError("upstream region requires x_split")
        region = mesh.centroid[:, 0] < init.x_split
    else:
        region = np.zeros(nc, dtype=bool)
    for sel, spec in ((region, init.upstream), (~region, init.default)):
        if spec is None or not sel.any():
            continue
        h[sel] = spec.h if spec.h is not None else np.maximum(
            spec.w - bathy.cell[sel], 0.0
        )
        u[sel] = spec.u
        v[sel] = spec.v
        c[sel] = spec.c
    return conserved_from_primitive(h, u, v, c, p)


def build_scenario(scenario: Scenario) -> RunSetup:
    """Materialize mesh, bottom, and initial state for the integrator."""
    spec = scenario.mesh
    if spec.path is not None:
        with open(spec.path, "r", encoding="utf-8") as fh:
            mesh = load_mesh_text(fh.read())
    else:
        mesh = build_structured_mesh(spec.nx, spec.ny, spec.domain, spec.diagonal)
        if spec.jitter:
            mesh = jitter_mesh(mesh, spec.jitter, spec.seed)
    if scenario.dam is not None:
        mesh = mesh.add_internal_walls(_dam_side_mask(mesh, scenario.dam))
    mesh = classify_boundaries(mesh, scenario.boundary)

    bspec = scenario.bathy
    if isinstance(bspec, tuple) and bspec and bspec[0] == "bump":
        bspec = cosine_bump_vertices(mesh, *bspec[1:])
    elif isinstance(bspec, tuple) and bspec and bspec[0] == "file":
        bspec = np.loadtxt(bspec[1]).reshape(-1)
        if bspec.size != mesh.n_vertices:
            raise ConfigError(
                f"bathymetry file has {bspec.size} values for {mesh.n_vertices} vertices"
            )
    bathy = build_bathymetry(mesh, bspec)
    p = scenario.params.resolved(mesh)
    U0 = _materialize_initial(scenario.initial, mesh, bathy, p)
    return RunSetup(
        name=scenario.name,
        mesh=mesh,
        bathy=bathy,
        params=p,
        U0=U0,
        t_end=scenario.t_end,
        snapshot_times=tuple(scenario.snapshot_times),
        dt_max=scenario.dt_max,
    )


def _steady_scenario(name, q0, slope, c0, scale, params, nx=None, ny=None,
                     jitter=0.15, seed=0, t_end=100.0) -> Scenario:
    """Uniform-flow-down-a-plane scenario over [0,10] x [0,5]."""
    profile = make_steady_profile(q0, params.n_manning, slope, params.delta, c0)
    if nx is None:
        # Square grid cells: 2 nx ny triangles with ny = nx/2 gives nx^2
        # cells; match the target average cell area 2e-3 * scale.
        nx = max(2, round(math.sqrt(50.0 / (2e-3 * scale))))
    if ny is None:
        ny = max(1, nx // 2)
    u0 = profile.q0 / (profile.h0 * profile.r0)
    return Scenario(
        name=name,
        mesh=MeshSpec(nx=nx, ny=ny, domain=(0.0, 10.0, 0.0, 5.0),
                      jitter=jitter, seed=seed),
        bathy=("plane", -slope, 0.0, 0.1 + slope * 10.0),
        params=params,
        initial=InitialSpec(default=RegionInit(h=profile.h0, u=u0, c=c0)),
        boundary={"x": "outflow", "y": "wall"},
        t_end=t_end,
        dt_max=1.0,
        steady=profile,
    )


def make_example1(scale: float = 1.0, r0_mode: str = "paper_value",
                  params: PhysParams | None = None, t_end: float = 100.0) -> Scenario:
    """Steady flow down a 1% plane slope on [0,10] x [0,5].

    ``r0_mode`` picks between two self-consistent reference states:
    ``paper_value`` keeps the depth 0.251189 m by running clear water
    (c0 = 0), ``consistent`` keeps c0 = 1 and takes the depth
    0.230540 m implied by the mixture density 1.1.  Average cell area
    is 2e-3 * scale.
    """
    if scale <= 0:
        raise ConfigError("scale must be positive")
    if r0_mode not in ("paper_value", "consistent"):
        raise ConfigError(f"unknown r0_mode '{r0_mode}'")
    if params is None:
        params = PhysParams(n_manning=0.1, delta=0.1, cfl=0.8, epsilon=1e-6)
    c0 = 0.0 if r0_mode == "paper_value" else 1.0
    return _steady_scenario("example1", q0=0.1, slope=0.01, c0=c0,
                            scale=scale, params=params, t_end=t_end)


def make_steady_custom(q0=0.1, slope=0.01, c0=0.0, scale=10.0,
                       params: PhysParams | None = None,
                       t_end: float = 100.0) -> Scenario:
    """Uniform-flow scenario with free constants (same domain as example1)."""
    if scale <= 0:
        raise ConfigError("scale must be positive")
    if params is None:
        params = PhysParams(n_manning=0.1, delta=0.1, cfl=0.8, epsilon=1e-6)
    scn = _steady_scenario("steady_custom", q0=q0, slope=slope, c0=c0,
                           scale=scale, params=params, t_end=t_end)
    return scn


def make_example2(scale: float = 1.0, t_end: float = 25.0,
                  params: PhysParams | None = None,
                  x_dam: float = 250.0, breach_center: float = 150.0,
                  breach_width: float = 75.0,
                  h_upstream: float = 10.0, c_upstream: float = 1.0) -> Scenario:
    """Partial dam break over a dry bed in a closed 500 x 300 basin.

    A wall along ``x = x_dam`` separates 10 m of water carrying unit
    concentration from a dry floor, except across a breach centered at
    ``breach_center``.  The structured mesh is kept unjittered and
    mirror-symmetric about the channel centerline, with even cell counts
    so the dam line and default breach edges fall on mesh lines.
    Average cell area is roughly 4.68 * scale.
    """
    if scale <= 0:
        raise ConfigError("scale must be positive")
    if breach_width >= 300.0:
        raise ConfigError("breach wider than the domain")
    if params is None:
        params = PhysParams(n_manning=0.1, delta=0.1, cfl=0.8, epsilon=1e-12)
    width = math.sqrt(2.0 * 4.68 * scale)  # grid spacing for the target area
    nx = max(2, 2 * round(250.0 / width))
    ny = max(2, 2 * round(150.0 / width))
    snap_times = tuple(ts for ts in (5.0, 25.0) if ts <= t_end)
    return Scenario(
        name="example2",
        mesh=MeshSpec(nx=nx, ny=ny, domain=(0.0, 500.0, 0.0, 300.0),
                      diagonal="mirrored"),
        bathy=("flat", 0.0),
        params=params,
        initial=InitialSpec(
            default=RegionInit(h=0.0, c=0.0),
            upstream=RegionInit(h=h_upstream, c=c_upstream),
            x_split=x_dam,
        ),
        boundary={"all": "wall"},
        t_end=t_end,
        snapshot_times=snap_times,
        dam=DamSpec(x_dam=x_dam, breach_center=breach_center,
                    breach_width=breach_width),
    )


def make_lake_at_rest(amplitude: float = 0.005, depth: float = 1.0,
                      nx: int = 16, radius: float = 0.45,
                      t_end: float = 10.0,
                      params: PhysParams | None = None) -> Scenario:
    """Closed square basin with a smooth cosine bump under still water.

    The surface starts flat at ``depth`` over a bump of height
    ``amplitude``; any velocity that develops measures the discrete
    imbalance between pressure flux and bottom source.  The bump profile
    is the square of a half-cosine, so its slope and curvature both
    vanish at the rim and the residual is dominated by the smooth
    interior rather than a rim artifact.
    """
    if not amplitude < depth:
        raise ConfigError(
            f"bump amplitude {amplitude} must stay below the still depth {depth}"
        )
    if amplitude < 0:
        raise ConfigError("bump amplitude must be non-negative")
    if not 0.0 < radius <= 0.5:
        raise ConfigError(f"bump radius {radius} must lie in (0, 0.5]")
    if params is None:
        params = PhysParams(n_manning=0.0, delta=0.0, cfl=0.8)
    return Scenario(
        name="lake_at_rest",
        mesh=MeshSpec(nx=nx, ny=nx, domain=(0.0, 1.0, 0.0, 1.0)),
        bathy=("bump", amplitude, 0.5, 0.5, radius),
        params=params,
        initial=InitialSpec(default=RegionInit(w=depth)),
        boundary={"all": "wall"},
        t_end=t_end,
    )


def cosine_bump_vertices(mesh: TriMesh, amplitude, cx, cy, radius) -> np.ndarray:
    """Squared-half-cosine bump sampled at mesh vertices."""
    d = np.hypot(mesh.vertices[:, 0] - cx, mesh.vertices[:, 1] - cy)
    z = np.zeros(mesh.n_vertices)
    inside = d < radius
    z[inside] = amplitude * (0.5 * (1.0 + np.cos(np.pi * d[inside] / radius))) ** 2
    return z

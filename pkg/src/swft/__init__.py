"""Shallow-water flow and transport on unstructured triangular meshes."""

from .config import (
    OutputOptions,
    RunConfig,
    dump_config,
    output_options,
    parse_config,
    resolve_scenario,
)
from .errors import (
    ConfigError,
    GeometryError,
    MeshFormatError,
    NumericsError,
    PositivityError,
)
from .mesh import (
    TriMesh,
    build_structured_mesh,
    compute_geometry,
    jitter_mesh,
    load_mesh_text,
    validate_mesh,
)
from .simulation import RunResult, RunSetup, error_norms, run, step_forward_euler
from .scenarios import (
    Scenario,
    build_scenario,
    make_example1,
    make_example2,
    make_lake_at_rest,
    make_steady_custom,
)
from .sources import SteadyProfile, make_steady_profile, steady_state_depth
from .state import (
    Bathymetry,
    PhysParams,
    PrimitiveState,
    build_bathymetry,
    conserved_from_primitive,
    desingularized_ratio,
    primitive_from_conserved,
)

__version__ = "0.1.0"

__all__ = [
    "Bathymetry",
    "ConfigError",
    "GeometryError",
    "MeshFormatError",
    "NumericsError",
    "OutputOptions",
    "PhysParams",
    "PositivityError",
    "PrimitiveState",
    "RunConfig",
    "RunResult",
    "RunSetup",
    "Scenario",
    "SteadyProfile",
    "TriMesh",
    "build_bathymetry",
    "build_scenario",
    "build_structured_mesh",
    "compute_geometry",
    "conserved_from_primitive",
    "desingularized_ratio",
    "dump_config",
    "error_norms",
    "jitter_mesh",
    "load_mesh_text",
    "make_example1",
    "make_example2",
    "make_lake_at_rest",
    "make_steady_custom",
    "make_steady_profile",
    "output_options",
    "parse_config",
    "primitive_from_conserved",
    "resolve_scenario",
    "run",
    "steady_state_depth",
    "step_forward_euler",
    "validate_mesh",
]

"""Command-line interface.

Subcommands:

``swft run <config>``
    Integrate the configured scenario, writing snapshot tables (CSV),
    VTK files, rendered figures, and a diagnostics series into the
    output directory.
``swft steady-error <config>``
    Run a steady-profile scenario and print the L1/L2/L-inf deviation
    table for depth, discharge, and concentration.
``swft validate-mesh <meshfile>``
    Load a mesh text file and print a geometry/connectivity report.
``swft dump-config <config>``
    Echo the canonical form of a configuration file.

The environment variable ``SWFT_OUT_DIR`` overrides the output
directory from any config file.
"""

from __future__ import annotations

import argparse
import os
import sys

import numpy as np

from .config import output_options, parse_config, dump_config, resolve_scenario
from .errors import ConfigError
from .mesh import load_mesh_text, validate_mesh
from .scenarios import build_scenario
from .simulation import error_norms, run
from .state import primitive_from_conserved

_RUN_ERRORS = (ValueError, RuntimeError, OSError)


def _read(path: str) -> str:
    with open(path, "r", encoding="utf-8") as fh:
        return fh.read()


def _resolve_out_dir(opts, scenario) -> str:
    env = os.environ.get("SWFT_OUT_DIR")
    if env:
        return env
    if opts.directory is not None:
        return opts.directory
    return scenario.output_dir


def _write_products(result, out_dir, opts) -> list:
    from . import output as out_mod

    setup = result.setup
    written = []
    for t, U in result.snapshots:
        stem = os.path.join(out_dir, f"snapshot_{t:012.6f}")
        if "csv" in opts.formats:
            out_mod.write_snapshot_csv(U, setup.mesh, setup.bathy, setup.params,
                                       stem + ".csv")
            written.append(stem + ".csv")
        if "vtk" in opts.formats:
            out_mod.write_snapshot_vtk(U, setup.mesh, setup.bathy, setup.params,
                                       stem + ".vtk",
                                       title=f"{setup.name} t={t:g}")
            written.append(stem + ".vtk")
        if opts.report:
            from . import report

            report.render_snapshot_figure(U, setup.mesh, setup.bathy,
                                          setup.params, t, stem + ".png")
            written.append(stem + ".png")
    diag_path = os.path.join(out_dir, "diagnostics.csv")
    out_mod.write_diagnostics_csv(result.diagnostics, diag_path)
    written.append(diag_path)
    if opts.report:
        from . import report

        fig_path = os.path.join(out_dir, "diagnostics.png")
        report.render_diagnostics_figure(result.diagnostics, fig_path)
        written.append(fig_path)
    return written


def _cmd_run(args) -> int:
    cfg = parse_config(_read(args.config))
    scenario = resolve_scenario(cfg)
    opts = output_options(cfg)
    out_dir = _resolve_out_dir(opts, scenario)
    os.makedirs(out_dir, exist_ok=True)

    setup = build_scenario(scenario)
    print(f"{scenario.name}: {setup.mesh.n_cells} cells, t_end = {setup.t_end:g} s")
    result = run(setup)

    written = _write_products(result, out_dir, opts)
    mass = result.diagnostics["mass"]
    drift = (mass[-1] - mass[0]) / mass[0] if mass[0] != 0 else 0.0
    print(f"finished: {result.n_steps} steps to t = {result.t:g} s "
          f"in {result.wall_time:.2f} s")
    print(f"mass drift: {drift:+.3e} relative; "
          f"final min depth {result.diagnostics['min_depth'][-1]:.3e} m")
    print(f"wrote {len(written)} files to {out_dir}")
    return 0


def _cmd_steady_error(args) -> int:
    cfg = parse_config(_read(args.config))
    scenario = resolve_scenario(cfg)
    if scenario.steady is None:
        raise ConfigError(
            f"scenario {scenario.name!r} has no steady reference profile; "
            "use example1 or steady_custom"
        )
    opts = output_options(cfg)
    out_dir = _resolve_out_dir(opts, scenario)
    os.makedirs(out_dir, exist_ok=True)

    setup = build_scenario(scenario)
    print(f"{scenario.name}: {setup.mesh.n_cells} cells, t_end = {setup.t_end:g} s")
    result = run(setup)

    profile = scenario.steady
    prim = primitive_from_conserved(result.U, setup.params)
    mesh = setup.mesh
    fields = {
        "h": (prim.h, profile.h0),
        "q": (result.U[:, 1], profile.q0),
        "c": (prim.c, profile.c0),
    }
    rows = []
    errors = {}
    for label, (computed, ref) in fields.items():
        reference = np.full(mesh.n_cells, ref)
        rows.append((label, *error_norms(computed, reference, mesh)))
        errors[label] = computed - reference

    header = f"{'quantity':>8}  {'L1':>13}  {'L2':>13}  {'Linf':>13}"
    print(header)
    table_lines = [header]
    for label, l1, l2, linf in rows:
        line = f"{label:>8}  {l1:13.6e}  {l2:13.6e}  {linf:13.6e}"
        print(line)
        table_lines.append(line)

    csv_path = os.path.join(out_dir, "steady_error.csv")
    with open(csv_path, "w", encoding="utf-8") as fh:
        fh.write("quantity,L1,L2,Linf\n")
        for label, l1, l2, linf in rows:
            fh.write(f"{label},{l1:.17g},{l2:.17g},{linf:.17g}\n")
    if opts.report:
        from . import report

        report.render_steady_error_figure(
            errors, mesh, os.path.join(out_dir, "steady_error.png")
        )
    return 0


def _cmd_validate_mesh(args) -> int:
    mesh = load_mesh_text(_read(args.meshfile))
    rep = validate_mesh(mesh)
    for line in rep.lines():
        print(line)
    return 0 if rep.ok else 1


def _cmd_dump_config(args) -> int:
    cfg = parse_config(_read(args.config))
    sys.stdout.write(dump_config(cfg))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="swft",
        description="Shallow-water flow and solute transport on triangular meshes.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="integrate a configured scenario")
    p_run.add_argument("config", help="path to a run configuration file")
    p_run.set_defaults(func=_cmd_run)

    p_err = sub.add_parser(
        "steady-error", help="norm table of deviations from the steady profile"
    )
    p_err.add_argument("config", help="path to a run configuration file")
    p_err.set_defaults(func=_cmd_steady_error)

    p_mesh = sub.add_parser("validate-mesh", help="check a mesh text file")
    p_mesh.add_argument("meshfile", help="path to a mesh text file")
    p_mesh.set_defaults(func=_cmd_validate_mesh)

    p_dump = sub.add_parser("dump-config", help="print the canonical config form")
    p_dump.add_argument("config", help="path to a run configuration file")
    p_dump.set_defaults(func=_cmd_dump_config)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except _RUN_ERRORS as e:
        print(f"swft: error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())

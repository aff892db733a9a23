"""Snapshot writers: delimited cell tables and legacy VTK unstructured grids.

Both formats carry the cell-centered fields exactly as the solver holds
them; numbers are printed with 17 significant digits so a written file
reproduces the in-memory doubles bit for bit when read back.
"""

from __future__ import annotations

import numpy as np

from .state import primitive_from_conserved

CSV_HEADER = "cell,x,y,area,h,w,u,v,c,r,q1,q2,q3,q4"


def _fmt(v: float) -> str:
    return f"{v:.17g}"


def snapshot_table(U, mesh, bathy, p) -> str:
    """Render the per-cell snapshot table as CSV text."""
    prim = primitive_from_conserved(U, p, z=bathy.cell)
    cols = [
        mesh.centroid[:, 0], mesh.centroid[:, 1], mesh.area,
        prim.h, prim.w, prim.u, prim.v, prim.c, prim.r,
        U[:, 0], U[:, 1], U[:, 2], U[:, 3],
    ]
    lines = [CSV_HEADER]
    for j in range(mesh.n_cells):
        lines.append(str(j) + "," + ",".join(_fmt(col[j]) for col in cols))
    return "\n".join(lines) + "\n"


def write_snapshot_csv(U, mesh, bathy, p, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(snapshot_table(U, mesh, bathy, p))


def read_snapshot_csv(path):
    """Read back a snapshot table as a dict of named float columns."""
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().strip()
        names = header.split(",")
        data = np.loadtxt(fh, delimiter=",", ndmin=2)
    return {name: data[:, i] for i, name in enumerate(names)}


def snapshot_vtk(U, mesh, bathy, p, title="swft snapshot") -> str:
    """Render a legacy-ASCII VTK unstructured grid of the snapshot.

    Points carry the bottom elevation as their z coordinate; the
    triangles are VTK cell type 5; h, w, c are cell scalars and the
    velocity is a cell vector with zero vertical component.
    """
    prim = primitive_from_conserved(U, p, z=bathy.cell)
    nv, nc = mesh.n_vertices, mesh.n_cells
    out = [
        "# vtk DataFile Version 3.0",
        title,
        "ASCII",
        "DATASET UNSTRUCTURED_GRID",
        f"POINTS {nv} double",
    ]
    for i in range(nv):
        x, y = mesh.vertices[i]
        out.append(f"{_fmt(x)} {_fmt(y)} {_fmt(bathy.vertex[i])}")
    out.append(f"CELLS {nc} {4 * nc}")
    for j in range(nc):
        a, b, c = mesh.cells[j]
        out.append(f"3 {a} {b} {c}")
    out.append(f"CELL_TYPES {nc}")
    out.extend(["5"] * nc)
    out.append(f"CELL_DATA {nc}")
    for name, field in (("h", prim.h), ("w", prim.w), ("c", prim.c)):
        out.append(f"SCALARS {name} double 1")
        out.append("LOOKUP_TABLE default")
        out.extend(_fmt(v) for v in field)
    out.append("VECTORS velocity double")
    for j in range(nc):
        out.append(f"{_fmt(prim.u[j])} {_fmt(prim.v[j])} 0")
    return "\n".join(out) + "\n"


def write_snapshot_vtk(U, mesh, bathy, p, path, title="swft snapshot") -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(snapshot_vtk(U, mesh, bathy, p, title))


def diagnostics_table(diagnostics: dict) -> str:
    """Render the per-step diagnostics series as CSV text."""
    names = list(diagnostics)
    series = [np.asarray(diagnostics[name]) for name in names]
    lines = [",".join(names)]
    for i in range(len(series[0])):
        lines.append(",".join(_fmt(float(col[i])) for col in series))
    return "\n".join(lines) + "\n"


def write_diagnostics_csv(diagnostics, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(diagnostics_table(diagnostics))

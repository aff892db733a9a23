"""Unstructured triangular meshes and their finite-volume geometry.

A :class:`TriMesh` stores, for every cell, the three directed sides
(vertex ``k`` to vertex ``k+1`` counterclockwise) together with outward
normals, side midpoints, cell-to-side heights and neighbor connectivity.
Interior sides are additionally collected once each in a unique side list
so flux loops can evaluate every side a single time and scatter the
result to both adjacent cells with opposite signs.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, GeometryError, MeshFormatError

# Side tag codes.  INTERIOR marks sides with a live neighbor; boundary sides
# (and interior sides converted to walls, e.g. a dam) carry WALL or OUTFLOW.
INTERIOR = 0
WALL = 1
OUTFLOW = 2
UNTAGGED = 3

TAG_NAMES = {WALL: "wall", OUTFLOW: "outflow", UNTAGGED: "untagged"}
TAG_CODES = {"wall": WALL, "outflow": OUTFLOW}

_BOX_SIDES = ("xmin", "xmax", "ymin", "ymax")
_RULE_KEYS = ("all", "x", "y") + _BOX_SIDES


class TriMesh:
    """Triangular mesh with precomputed finite-volume geometry.

    Parameters
    ----------
    vertices : (nv, 2) float array
    cells : (nc, 3) int array
        Vertex indices, counterclockwise.
    validate : bool
        When True (the default) reject degenerate geometry: duplicate
        vertices, zero/negative cell areas, sides shared by more than two
        cells.  The raw ``validate=False`` path still builds every array
        (areas keep their sign) so that :func:`validate_mesh` can report
        problems instead of raising.
    """

    def __init__(self, vertices, cells, validate: bool = True):
        vertices = np.ascontiguousarray(vertices, dtype=np.float64)
        cells = np.ascontiguousarray(cells, dtype=np.int64)
        if vertices.ndim != 2 or vertices.shape[1] != 2:
            raise GeometryError("vertices must have shape (nv, 2)")
        if cells.ndim != 2 or cells.shape[1] != 3:
            raise GeometryError("cells must have shape (nc, 3)")
        nv = vertices.shape[0]
        if cells.size and (cells.min() < 0 or cells.max() >= nv):
            raise GeometryError("cell vertex index out of range")

        self.vertices = vertices
        self.cells = cells
        self.n_vertices = nv
        self.n_cells = cells.shape[0]

        if validate:
            self._check_duplicate_vertices()

        p0 = vertices[cells[:, 0]]
        p1 = vertices[cells[:, 1]]
        p2 = vertices[cells[:, 2]]
        twice_area = (p1[:, 0] - p0[:, 0]) * (p2[:, 1] - p0[:, 1]) - (
            p2[:, 0] - p0[:, 0]
        ) * (p1[:, 1] - p0[:, 1])
        if validate and self.n_cells and twice_area.min() <= 0.0:
            bad = int(np.argmin(twice_area))
            raise GeometryError(
                f"cell {bad} is degenerate or clockwise "
                f"(signed doubled area {twice_area[bad]:.3e})"
            )
        self.area = 0.5 * twice_area
        self.centroid = (p0 + p1 + p2) / 3.0

        # Side k runs from vertex k to vertex k+1 (mod 3); for a CCW cell the
        # outward length-weighted normal of that side is (dy, -dx).
        pts = vertices[cells]                      # (nc, 3, 2)
        nxt = vertices[np.roll(cells, -1, axis=1)]  # (nc, 3, 2)
        d = nxt - pts
        self.wnormal = np.stack([d[:, :, 1], -d[:, :, 0]], axis=-1)
        self.edge_len = np.hypot(d[:, :, 0], d[:, :, 1])
        with np.errstate(divide="ignore", invalid="ignore"):
            self.normal = self.wnormal / self.edge_len[:, :, None]
        self.midpoint = 0.5 * (pts + nxt)
        with np.errstate(divide="ignore", invalid="ignore"):
            self.height = 2.0 * self.area[:, None] / self.edge_len
        self.offset = self.midpoint - self.centroid[:, None, :]

        self._build_neighbors(validate)
        self.boundary_tag = np.where(
            self.neighbor < 0, UNTAGGED, INTERIOR
        ).astype(np.int64)
        self._build_sides()

    # -- construction helpers ------------------------------------------------

    def _check_duplicate_vertices(self, tol: float = 1e-12) -> None:
        if self.n_vertices < 2:
            return
        order = np.lexsort((self.vertices[:, 1], self.vertices[:, 0]))
        sv = self.vertices[order]
        close = np.hypot(np.diff(sv[:, 0]), np.diff(sv[:, 1])) < tol
        if np.any(close):
            i = int(np.argmax(close))
            raise GeometryError(
                f"duplicate vertices {order[i]} and {order[i + 1]} "
                f"within {tol:g}"
            )

    def _build_neighbors(self, validate: bool) -> None:
        nc = self.n_cells
        a = self.cells
        b = np.roll(self.cells, -1, axis=1)
        lo = np.minimum(a, b).ravel()
        hi = np.maximum(a, b).ravel()
        key = lo * np.int64(self.n_vertices + 1) + hi

        neighbor = np.full((nc, 3), -1, dtype=np.int64)
        neighbor_slot = np.full((nc, 3), -1, dtype=np.int64)
        if nc:
            order = np.argsort(key, kind="stable")
            ks = key[order]
            eq = ks[1:] == ks[:-1]
            if eq.size > 1 and np.any(eq[1:] & eq[:-1]):
                t = int(np.argmax(eq[1:] & eq[:-1]))
                raise GeometryError(
                    f"side {lo[order[t + 1]]}-{hi[order[t + 1]]} is shared "
                    "by more than two cells"
                )
            first = order[:-1][eq]
            second = order[1:][eq]
            j1, k1 = np.divmod(first, 3)
            j2, k2 = np.divmod(second, 3)
            if validate and np.any(j1 == j2):
                raise GeometryError("cell repeats a vertex pair")
            neighbor[j1, k1] = j2
            neighbor_slot[j1, k1] = k2
            neighbor[j2, k2] = j1
            neighbor_slot[j2, k2] = k1
        self.neighbor = neighbor
        self.neighbor_slot = neighbor_slot
        # Green-Gauss gathers fall back to the cell's own value on boundary
        # sides; precompute the index that encodes that rule.
        own = np.arange(nc, dtype=np.int64)[:, None]
        self.grad_neighbor = np.where(neighbor >= 0, neighbor, own)

    def _build_sides(self) -> None:
        """Collect each geometric side exactly once.

        The cell with the smaller index owns an interior side; boundary
        sides are owned by their only cell.  ``side_sign`` is +1 on the
        owner slot and -1 on the neighbor slot so a per-side quantity
        computed with the owner's outward normal can be scattered to both
        cells with opposite signs.
        """
        nc = self.n_cells
        owner_mask = (self.neighbor < 0) | (
            np.arange(nc, dtype=np.int64)[:, None] < self.neighbor
        )
        j, k = np.nonzero(owner_mask)
        self.side_cell = j.astype(np.int64)
        self.side_slot = k.astype(np.int64)
        self.side_nbr = self.neighbor[j, k]
        self.side_nbr_slot = self.neighbor_slot[j, k]
        self.n_sides = self.side_cell.shape[0]

        side_index = np.empty((nc, 3), dtype=np.int64)
        side_sign = np.empty((nc, 3), dtype=np.float64)
        ids = np.arange(self.n_sides, dtype=np.int64)
        side_index[j, k] = ids
        side_sign[j, k] = 1.0
        interior = self.side_nbr >= 0
        side_index[self.side_nbr[interior], self.side_nbr_slot[interior]] = ids[
            interior
        ]
        side_sign[self.side_nbr[interior], self.side_nbr_slot[interior]] = -1.0
        self.side_index = side_index
        self.side_sign = side_sign

        self.is_boundary = self.neighbor < 0
        self.n_boundary_sides = int(np.count_nonzero(~interior))

    def _freeze(self) -> "TriMesh":
        for name, value in vars(self).items():
            if isinstance(value, np.ndarray):
                value.setflags(write=False)
        return self

    # -- derived scalars -----------------------------------------------------

    @property
    def bbox(self):
        """((xmin, xmax), (ymin, ymax)) of the vertex set."""
        v = self.vertices
        return (
            (float(v[:, 0].min()), float(v[:, 0].max())),
            (float(v[:, 1].min()), float(v[:, 1].max())),
        )

    def mean_edge_length(self) -> float:
        """Mean length over unique sides (interior sides counted once)."""
        return float(self.edge_len[self.side_cell, self.side_slot].mean())

    def min_height(self) -> float:
        return float(self.height.min())

    def total_area(self) -> float:
        return float(self.area.sum())

    # -- connectivity edits --------------------------------------------------

    def _with_connectivity(self, neighbor, neighbor_slot, boundary_tag) -> "TriMesh":
        clone = object.__new__(TriMesh)
        clone.__dict__.update(self.__dict__)
        clone.neighbor = neighbor
        clone.neighbor_slot = neighbor_slot
        own = np.arange(clone.n_cells, dtype=np.int64)[:, None]
        clone.grad_neighbor = np.where(neighbor >= 0, neighbor, own)
        clone.boundary_tag = boundary_tag
        clone._build_sides()
        return clone._freeze()

    def with_boundary_tags(self, boundary_tag) -> "TriMesh":
        boundary_tag = np.ascontiguousarray(boundary_tag, dtype=np.int64)
        if boundary_tag.shape != (self.n_cells, 3):
            raise ValueError("boundary_tag must have shape (nc, 3)")
        return self._with_connectivity(
            self.neighbor, self.neighbor_slot, boundary_tag
        )

    def add_internal_walls(self, mask) -> "TriMesh":
        """Convert the flagged interior sides into wall boundaries.

        ``mask`` is a (nc, 3) boolean array; entries on boundary sides are
        ignored.  Both directed copies of a flagged side are severed, so the
        two adjacent cells each see a wall afterwards.
        """
        mask = np.asarray(mask, dtype=bool)
        if mask.shape != (self.n_cells, 3):
            raise ValueError("mask must have shape (nc, 3)")
        mask = mask & (self.neighbor >= 0)
        # Symmetrize: severing (j, k) also severs the reciprocal slot.
        j, k = np.nonzero(mask)
        full = mask.copy()
        full[self.neighbor[j, k], self.neighbor_slot[j, k]] = True

        neighbor = self.neighbor.copy()
        neighbor_slot = self.neighbor_slot.copy()
        boundary_tag = self.boundary_tag.copy()
        neighbor[full] = -1
        neighbor_slot[full] = -1
        boundary_tag[full] = WALL
        return self._with_connectivity(neighbor, neighbor_slot, boundary_tag)


def compute_geometry(vertices, cells, validate: bool = True) -> TriMesh:
    """Build a :class:`TriMesh` from raw vertex and cell arrays."""
    return TriMesh(vertices, cells, validate=validate)._freeze()


def build_structured_mesh(nx: int, ny: int, domain=(0.0, 1.0, 0.0, 1.0),
                          diagonal: str = "same") -> TriMesh:
    """Triangulate ``[x0, x1] x [y0, y1]`` from an ``nx`` by ``ny`` grid.

    Each grid rectangle is split into two triangles.  With
    ``diagonal="same"`` every rectangle uses the lower-left to
    upper-right diagonal; interior cells then have their face midpoints
    exactly halfway between adjacent centroids, which makes the
    Green-Gauss gradients of this package linear-exact away from the
    boundary.  With ``diagonal="mirrored"`` rows in the upper half use
    the mirror-image diagonal, making the triangulation exactly
    mirror-symmetric about the horizontal centerline whenever ``ny`` is
    even (an odd middle row keeps the default diagonal) at the price of
    a seam of less regular cells along that centerline.

    Returns a mesh with ``2 * nx * ny`` counterclockwise cells and
    untagged boundary sides.
    """
    if nx < 1 or ny < 1:
        raise ValueError("nx and ny must be positive")
    if diagonal not in ("same", "mirrored"):
        raise ValueError(f"diagonal must be 'same' or 'mirrored', got {diagonal!r}")
    x0, x1, y0, y1 = map(float, domain)
    if not (x1 > x0 and y1 > y0):
        raise ValueError("domain must satisfy x1 > x0 and y1 > y0")

    xs = np.linspace(x0, x1, nx + 1)
    ys = np.linspace(y0, y1, ny + 1)
    # Force the y coordinates to be an exact mirror of themselves so the
    # upper-half geometry is the bitwise reflection of the lower half.
    s = y0 + y1
    for i in range((ny + 1) // 2):
        ys[ny - i] = s - ys[i]
    if ny % 2 == 0:
        ys[ny // 2] = 0.5 * s

    xg, yg = np.meshgrid(xs, ys)
    vertices = np.column_stack([xg.ravel(), yg.ravel()])

    def vid(i, j):
        return j * (nx + 1) + i

    cells = np.empty((2 * nx * ny, 3), dtype=np.int64)
    half = (ny + 1) // 2 if diagonal == "mirrored" else ny
    c = 0
    for j in range(ny):
        for i in range(nx):
            ll = vid(i, j)
            lr = vid(i + 1, j)
            ur = vid(i + 1, j + 1)
            ul = vid(i, j + 1)
            if j < half:
                cells[c] = (ll, lr, ur)
                cells[c + 1] = (ll, ur, ul)
            else:
                # Mirror image of the partner row below, with the vertex
                # order arranged so mirrored cells traverse mirrored
                # coordinates in the same sequence.
                cells[c] = (ul, lr, ur)
                cells[c + 1] = (ul, ll, lr)
            c += 2
    return compute_geometry(vertices, cells)


def jitter_mesh(mesh: TriMesh, rel_amount: float = 0.15, seed: int = 0) -> TriMesh:
    """Displace interior vertices by at most ``rel_amount`` of the min edge.

    Boundary vertices stay fixed so the domain outline (and any straight
    wall lines on it) is preserved.  ``rel_amount`` above 0.2 is rejected:
    larger displacements can invert thin cells.
    """
    if not 0.0 <= rel_amount <= 0.2:
        raise ValueError("rel_amount must lie in [0, 0.2]")
    if rel_amount == 0.0:
        return mesh
    amp = rel_amount * float(mesh.edge_len.min())
    rng = np.random.default_rng(seed)
    disp = rng.uniform(-amp / np.sqrt(2.0), amp / np.sqrt(2.0), size=mesh.vertices.shape)

    on_boundary = np.zeros(mesh.n_vertices, dtype=bool)
    j, k = np.nonzero(mesh.is_boundary)
    on_boundary[mesh.cells[j, k]] = True
    on_boundary[np.roll(mesh.cells, -1, axis=1)[j, k]] = True
    disp[on_boundary] = 0.0
    return compute_geometry(mesh.vertices + disp, mesh.cells)


def load_mesh_text(text: str) -> TriMesh:
    """Parse the plain-text mesh format.

    Line 1 holds ``NV NT``; the next ``NV`` lines hold ``x y`` vertex
    coordinates and the following ``NT`` lines hold 1-based vertex triples.
    Lines starting with ``#`` are ignored.  Clockwise cells are reoriented.
    Errors name the 1-based line number in the original text.
    """
    rows = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        stripped = raw.strip()
        if not stripped or stripped.startswith("#"):
            continue
        rows.append((lineno, stripped))
    if not rows:
        raise MeshFormatError("line 1: empty mesh file")

    lineno, header = rows[0]
    parts = header.split()
    if len(parts) != 2:
        raise MeshFormatError(f"line {lineno}: header must be 'NV NT'")
    try:
        nv, nt = int(parts[0]), int(parts[1])
    except ValueError:
        raise MeshFormatError(f"line {lineno}: header must be 'NV NT'") from None
    if nv < 3 or nt < 1:
        raise MeshFormatError(f"line {lineno}: need at least 3 vertices and 1 cell")
    if len(rows) - 1 != nv + nt:
        raise MeshFormatError(
            f"line {lineno}: header promises {nv + nt} data lines, "
            f"found {len(rows) - 1}"
        )

    vertices = np.empty((nv, 2))
    for i in range(nv):
        lineno, line = rows[1 + i]
        parts = line.split()
        if len(parts) != 2:
            raise MeshFormatError(f"line {lineno}: expected 'x y'")
        try:
            vertices[i] = (float(parts[0]), float(parts[1]))
        except ValueError:
            raise MeshFormatError(f"line {lineno}: bad coordinate") from None

    cells = np.empty((nt, 3), dtype=np.int64)
    for i in range(nt):
        lineno, line = rows[1 + nv + i]
        parts = line.split()
        if len(parts) != 3:
            raise MeshFormatError(f"line {lineno}: expected 'v1 v2 v3'")
        try:
            tri = [int(p) for p in parts]
        except ValueError:
            raise MeshFormatError(f"line {lineno}: bad vertex index") from None
        for v in tri:
            if not 1 <= v <= nv:
                raise MeshFormatError(
                    f"line {lineno}: vertex index {v} outside 1..{nv}"
                )
        cells[i] = [v - 1 for v in tri]

    # Reorient clockwise cells before validation.
    p0 = vertices[cells[:, 0]]
    p1 = vertices[cells[:, 1]]
    p2 = vertices[cells[:, 2]]
    signed = (p1[:, 0] - p0[:, 0]) * (p2[:, 1] - p0[:, 1]) - (
        p2[:, 0] - p0[:, 0]
    ) * (p1[:, 1] - p0[:, 1])
    flip = signed < 0.0
    cells[flip] = cells[flip][:, [0, 2, 1]]
    return compute_geometry(vertices, cells)


def classify_boundaries(mesh: TriMesh, rules: dict, tol: float | None = None) -> TriMesh:
    """Tag boundary sides from bounding-box rules.

    ``rules`` maps any of ``all, x, y, xmin, xmax, ymin, ymax`` to
    ``"wall"`` or ``"outflow"``; the more specific key wins.  Every
    boundary-side midpoint must land on a box side covered by a rule
    (within ``tol``, default ``1e-9`` of the box diagonal), otherwise a
    :class:`ConfigError` names the offending midpoint.

    Interior sides already converted to walls are left untouched.
    """
    for key, value in rules.items():
        if key not in _RULE_KEYS:
            raise ConfigError(f"unknown boundary rule key '{key}'")
        if value not in TAG_CODES:
            raise ConfigError(f"unknown boundary tag '{value}'")

    (xmin, xmax), (ymin, ymax) = mesh.bbox
    if tol is None:
        tol = 1e-9 * float(np.hypot(xmax - xmin, ymax - ymin))

    box_tag = {}
    for key in ("all", "x", "y") + _BOX_SIDES:
        if key not in rules:
            continue
        code = TAG_CODES[rules[key]]
        if key == "all":
            targets = _BOX_SIDES
        elif key == "x":
            targets = ("xmin", "xmax")
        elif key == "y":
            targets = ("ymin", "ymax")
        else:
            targets = (key,)
        for t in targets:
            box_tag[t] = code

    limits = {"xmin": (0, xmin), "xmax": (0, xmax), "ymin": (1, ymin), "ymax": (1, ymax)}
    tags = mesh.boundary_tag.copy()
    j, k = np.nonzero(mesh.neighbor < 0)
    for jj, kk in zip(j, k):
        if tags[jj, kk] == WALL:
            continue  # pre-existing internal wall, off the bounding box
        mx, my = mesh.midpoint[jj, kk]
        matched = set()
        for name, (axis, value) in limits.items():
            coord = mx if axis == 0 else my
            if abs(coord - value) <= tol and name in box_tag:
                matched.add(box_tag[name])
        if not matched:
            raise ConfigError(
                f"boundary side midpoint ({mx:.6g}, {my:.6g}) matches no rule"
            )
        if len(matched) > 1:
            raise ConfigError(
                f"boundary side midpoint ({mx:.6g}, {my:.6g}) matches "
                "conflicting rules"
            )
        tags[jj, kk] = matched.pop()
    return mesh.with_boundary_tags(tags)


@dataclass
class MeshBuildReport:
    """Summary statistics and problems gathered by :func:`validate_mesh`."""

    n_vertices: int
    n_cells: int
    n_sides: int
    n_boundary_sides: int
    boundary_counts: dict
    min_area: float
    max_area: float
    min_height: float
    max_divergence_residual: float
    problems: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.problems

    def lines(self):
        yield f"vertices            {self.n_vertices}"
        yield f"cells               {self.n_cells}"
        yield f"sides               {self.n_sides}"
        yield f"boundary sides      {self.n_boundary_sides}"
        for name, count in sorted(self.boundary_counts.items()):
            yield f"  tagged {name:<12} {count}"
        yield f"min cell area       {self.min_area:.6e}"
        yield f"max cell area       {self.max_area:.6e}"
        yield f"min height          {self.min_height:.6e}"
        yield f"max div residual    {self.max_divergence_residual:.3e}"
        for p in self.problems:
            yield f"PROBLEM: {p}"


def validate_mesh(mesh: TriMesh) -> MeshBuildReport:
    """Check mesh identities and collect statistics without raising."""
    problems = []
    if mesh.n_cells == 0:
        problems.append("mesh has no cells")
        return MeshBuildReport(mesh.n_vertices, 0, 0, 0, {}, np.nan, np.nan,
                               np.nan, np.nan, problems)

    if mesh.area.min() <= 0.0:
        bad = np.nonzero(mesh.area <= 0.0)[0]
        problems.append(
            f"{bad.size} cell(s) with non-positive area, first is cell {bad[0]}"
        )

    resid = np.abs(mesh.wnormal.sum(axis=1))  # (nc, 2)
    max_resid = float(resid.max())
    perimeter = mesh.edge_len.sum(axis=1)
    scaled = resid.max(axis=1) / perimeter
    if scaled.max() > 1e-12:
        problems.append(
            f"divergence identity violated on cell {int(np.argmax(scaled))}"
        )

    interior = mesh.neighbor >= 0
    j, k = np.nonzero(interior)
    recip = mesh.neighbor[mesh.neighbor[j, k], mesh.neighbor_slot[j, k]]
    if not np.array_equal(recip, j):
        problems.append("neighbor references are not reciprocal")

    boundary_counts = {}
    for code, name in TAG_NAMES.items():
        count = int(np.count_nonzero(mesh.boundary_tag[mesh.neighbor < 0] == code))
        if count:
            boundary_counts[name] = count

    return MeshBuildReport(
        n_vertices=mesh.n_vertices,
        n_cells=mesh.n_cells,
        n_sides=mesh.n_sides,
        n_boundary_sides=mesh.n_boundary_sides,
        boundary_counts=boundary_counts,
        min_area=float(mesh.area.min()),
        max_area=float(mesh.area.max()),
        min_height=float(mesh.height.min()),
        max_divergence_residual=max_resid,
        problems=problems,
    )

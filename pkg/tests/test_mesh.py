"""Tests for triangular mesh construction, geometry and connectivity."""

import numpy as np
import pytest

import properties as props
from swft.errors import ConfigError, GeometryError, MeshFormatError
from swft.mesh import (
    OUTFLOW,
    UNTAGGED,
    WALL,
    build_structured_mesh,
    classify_boundaries,
    compute_geometry,
    jitter_mesh,
    load_mesh_text,
    validate_mesh,
)


class TestStructuredMesh:
    """Structured triangulations of rectangles."""

    def test_unit_square_two_cells(self):
        """A 1x1 grid splits the unit square into two half-area triangles."""
        mesh = build_structured_mesh(1, 1)
        assert mesh.n_cells == 2, f"expected 2 cells, got {mesh.n_cells}"
        assert np.allclose(mesh.area, 0.5), f"areas {mesh.area} should be 0.5"
        assert mesh.n_boundary_sides == 4, (
            f"unit square should expose 4 boundary sides, got {mesh.n_boundary_sides}"
        )
        assert abs(mesh.total_area() - 1.0) < 1e-15

    def test_rectangle_counts_and_heights(self):
        """A 10x5 grid on [0,10]x[0,5] gives 100 unit right triangles."""
        mesh = build_structured_mesh(10, 5, (0.0, 10.0, 0.0, 5.0))
        assert mesh.n_cells == 100, f"expected 100 cells, got {mesh.n_cells}"
        assert abs(mesh.total_area() - 50.0) < 1e-12
        # legs of length 1 give height 1; the hypotenuse height is 1/sqrt(2)
        assert abs(mesh.min_height() - 1.0 / np.sqrt(2.0)) < 1e-14, (
            f"min height {mesh.min_height():.6f}, expected 0.707107"
        )

    def test_new_mesh_is_untagged(self):
        """Boundary sides start untagged until classified."""
        mesh = build_structured_mesh(2, 2)
        tags = mesh.boundary_tag[mesh.neighbor < 0]
        assert (tags == UNTAGGED).all(), "fresh boundary sides must be untagged"

    def test_mirrored_diagonal_is_symmetric(self):
        """diagonal='mirrored' with even rows pairs every cell with its mirror."""
        mesh = build_structured_mesh(4, 4, (0.0, 2.0, 0.0, 1.0),
                                     diagonal="mirrored")
        partner = props.mirror_pairs(mesh, 1.0)
        assert np.array_equal(mesh.area, mesh.area[partner]), (
            "mirrored areas must match bitwise"
        )
        flipped = mesh.centroid.copy()
        flipped[:, 1] = 1.0 - flipped[:, 1]
        assert np.allclose(mesh.centroid[partner], flipped, atol=1e-14)

    def test_rejects_bad_arguments(self):
        """Degenerate grid sizes and domains are rejected."""
        with pytest.raises(ValueError):
            build_structured_mesh(0, 1)
        with pytest.raises(ValueError):
            build_structured_mesh(2, 2, (1.0, 1.0, 0.0, 1.0))
        with pytest.raises(ValueError):
            build_structured_mesh(2, 2, diagonal="zigzag")


class TestCellGeometry:
    """Per-cell areas, normals and heights."""

    def test_equilateral_triangle_area(self):
        """An equilateral triangle of side 1 has area sqrt(3)/4."""
        verts = np.array([[0.0, 0.0], [1.0, 0.0], [0.5, np.sqrt(3.0) / 2.0]])
        mesh = compute_geometry(verts, np.array([[0, 1, 2]]))
        assert abs(mesh.area[0] - 0.433013) < 1e-6, (
            f"area {mesh.area[0]:.6f}, expected 0.433013"
        )
        assert np.allclose(mesh.edge_len, 1.0)
        assert np.allclose(mesh.height, np.sqrt(3.0) / 2.0)

    def test_right_triangle_normals_close(self):
        """Length-weighted outward normals of one cell sum exactly to zero."""
        verts = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])
        mesh = compute_geometry(verts, np.array([[0, 1, 2]]))
        closure = mesh.wnormal.sum(axis=1)
        assert np.abs(closure).max() == 0.0, (
            f"weighted normals sum to {closure}, expected exact zero"
        )
        norms = np.hypot(mesh.normal[..., 0], mesh.normal[..., 1])
        assert np.allclose(norms, 1.0, atol=1e-15), "normals must be unit length"

    def test_normals_point_outward(self):
        """Each outward normal has positive dot product with center-to-midpoint."""
        mesh = jitter_mesh(build_structured_mesh(4, 3), 0.15, seed=3)
        outward = (mesh.normal * mesh.offset).sum(axis=2)
        assert outward.min() > 0.0, "a normal points into its own cell"

    def test_midpoints_and_offsets(self):
        """Side midpoints are vertex averages; offsets are midpoint - centroid."""
        mesh = build_structured_mesh(2, 2)
        v = mesh.vertices[mesh.cells]
        mid = 0.5 * (v + np.roll(v, -1, axis=1))
        assert np.array_equal(mesh.midpoint, mid)
        assert np.array_equal(mesh.offset, mesh.midpoint - mesh.centroid[:, None, :])

    def test_degenerate_cell_rejected(self):
        """Zero-area and clockwise cells raise unless validation is off."""
        verts = np.array([[0.0, 0.0], [1.0, 0.0], [2.0, 0.0], [0.0, 1.0]])
        with pytest.raises(GeometryError):
            compute_geometry(verts, np.array([[0, 1, 2]]))  # collinear
        with pytest.raises(GeometryError):
            compute_geometry(verts, np.array([[0, 3, 1]]))  # clockwise


class TestConnectivity:
    """Neighbor tables and the unique interior side list."""

    def test_two_cell_square_shares_diagonal(self):
        """The two unit-square cells are mutual neighbors across the diagonal."""
        mesh = build_structured_mesh(1, 1)
        interior = mesh.neighbor >= 0
        assert interior.sum() == 2, "exactly one shared side, seen from both cells"
        j, k = np.nonzero(interior)
        assert set(mesh.neighbor[j, k]) == {0, 1}
        assert mesh.n_sides == 5, f"2 cells share 1 of their 6 sides, got {mesh.n_sides}"

    def test_neighbors_reciprocal_and_geometry_shared(self):
        """Neighbor slots point back, with identical midpoints and lengths."""
        mesh = jitter_mesh(build_structured_mesh(5, 4), 0.2, seed=1)
        j, k = np.nonzero(mesh.neighbor >= 0)
        nj, nk = mesh.neighbor[j, k], mesh.neighbor_slot[j, k]
        assert np.array_equal(mesh.neighbor[nj, nk], j), "neighbor links not mutual"
        assert np.array_equal(mesh.midpoint[j, k], mesh.midpoint[nj, nk])
        assert np.array_equal(mesh.edge_len[j, k], mesh.edge_len[nj, nk])
        # opposite outward normals
        assert np.abs(mesh.normal[j, k] + mesh.normal[nj, nk]).max() < 1e-14

    def test_unique_side_list_covers_every_side_once(self):
        """side arrays enumerate each geometric side exactly once."""
        mesh = jitter_mesh(build_structured_mesh(4, 4), 0.15, seed=2)
        seen = np.zeros((mesh.n_cells, 3), dtype=int)
        np.add.at(seen, (mesh.side_cell, mesh.side_slot), 1)
        nbr_ok = mesh.side_nbr >= 0
        np.add.at(seen, (mesh.side_nbr[nbr_ok], mesh.side_nbr_slot[nbr_ok]), 1)
        assert (seen == 1).all(), "every directed slot must be visited exactly once"
        ids = mesh.side_index[mesh.side_cell, mesh.side_slot]
        assert np.array_equal(ids, np.arange(mesh.n_sides)), (
            "owner slots must map to their own unique side id"
        )
        assert (mesh.side_sign[mesh.side_cell, mesh.side_slot] == 1.0).all(), (
            "owner side of the scatter must carry +1"
        )
        assert (mesh.side_sign[mesh.side_nbr[nbr_ok],
                               mesh.side_nbr_slot[nbr_ok]] == -1.0).all(), (
            "neighbor side of the scatter must carry -1"
        )

    def test_internal_walls_sever_neighbors(self):
        """Flagged interior sides become walls on both adjacent cells."""
        mesh = build_structured_mesh(4, 2, (0.0, 4.0, 0.0, 2.0))
        on_line = np.abs(mesh.midpoint[:, :, 0] - 2.0) < 1e-12
        walled = mesh.add_internal_walls(on_line & (mesh.neighbor >= 0))
        j, k = np.nonzero(on_line & (mesh.neighbor >= 0))
        assert (walled.neighbor[j, k] == -1).all(), "walled sides keep neighbors"
        assert (walled.boundary_tag[j, k] == WALL).all()
        assert walled.n_boundary_sides == mesh.n_boundary_sides + j.size
        report = validate_mesh(walled)
        assert report.ok, f"walled mesh fails validation: {report.problems}"


class TestJitter:
    """Vertex jitter for unstructured-looking test meshes."""

    def test_boundary_vertices_fixed(self):
        """Jitter moves interior vertices only."""
        mesh = build_structured_mesh(5, 5)
        moved = jitter_mesh(mesh, 0.2, seed=7)
        edge = (
            (np.abs(mesh.vertices[:, 0]) < 1e-12)
            | (np.abs(mesh.vertices[:, 0] - 1) < 1e-12)
            | (np.abs(mesh.vertices[:, 1]) < 1e-12)
            | (np.abs(mesh.vertices[:, 1] - 1) < 1e-12)
        )
        assert np.array_equal(moved.vertices[edge], mesh.vertices[edge]), (
            "boundary vertices must not move"
        )
        assert np.abs(moved.vertices[~edge] - mesh.vertices[~edge]).max() > 0.0

    def test_deterministic_and_bounded(self):
        """Same seed reproduces the mesh; amounts above 0.2 are rejected."""
        mesh = build_structured_mesh(4, 4)
        a = jitter_mesh(mesh, 0.15, seed=11)
        b = jitter_mesh(mesh, 0.15, seed=11)
        assert np.array_equal(a.vertices, b.vertices), "jitter must be deterministic"
        with pytest.raises(ValueError):
            jitter_mesh(mesh, 0.25)
        assert jitter_mesh(mesh, 0.0) is mesh, "zero jitter should be a no-op"


class TestMeshLoader:
    """The plain-text mesh format."""

    SAMPLE = """\
# three vertices, one clockwise cell
3 1
0.0 0.0
0.0 1.0
1.0 0.0
1 2 3
"""

    def test_loads_and_reorients(self):
        """Clockwise input cells are flipped to counterclockwise."""
        mesh = load_mesh_text(self.SAMPLE)
        assert mesh.n_cells == 1 and mesh.n_vertices == 3
        assert abs(mesh.area[0] - 0.5) < 1e-15, (
            f"reoriented area {mesh.area[0]}, expected +0.5"
        )

    def test_errors_name_line_numbers(self):
        """Malformed content reports the 1-based source line."""
        with pytest.raises(MeshFormatError, match="line 1"):
            load_mesh_text("")
        with pytest.raises(MeshFormatError, match="line 2"):
            load_mesh_text("# c\n3 1 7\n")
        with pytest.raises(MeshFormatError, match="line 3"):
            load_mesh_text("3 1\n0 0\nnope 1\n1 0\n1 2 3\n")
        with pytest.raises(MeshFormatError, match="line 5"):
            load_mesh_text("3 1\n0 0\n0 1\n1 0\n1 2 9\n")
        with pytest.raises(MeshFormatError, match="line 1"):
            load_mesh_text("3 2\n0 0\n0 1\n1 0\n1 2 3\n")


class TestBoundaryClassification:
    """Bounding-box boundary tagging rules."""

    def test_specific_rule_wins(self):
        """A box-side rule overrides 'all' on its side only."""
        mesh = build_structured_mesh(3, 3)
        tagged = classify_boundaries(mesh, {"all": "wall", "xmax": "outflow"})
        j, k = np.nonzero(tagged.neighbor < 0)
        on_xmax = np.abs(tagged.midpoint[j, k, 0] - 1.0) < 1e-9
        tags = tagged.boundary_tag[j, k]
        assert (tags[on_xmax] == OUTFLOW).all(), "xmax sides should be outflow"
        assert (tags[~on_xmax] == WALL).all(), "remaining sides should be walls"

    def test_axis_rules(self):
        """x/y shorthand covers both opposing box sides."""
        mesh = build_structured_mesh(3, 2, (0.0, 10.0, 0.0, 5.0))
        tagged = classify_boundaries(mesh, {"x": "outflow", "y": "wall"})
        j, k = np.nonzero(tagged.neighbor < 0)
        mx = tagged.midpoint[j, k, 0]
        on_x = (np.abs(mx) < 1e-9) | (np.abs(mx - 10.0) < 1e-9)
        assert (tagged.boundary_tag[j, k][on_x] == OUTFLOW).all()
        assert (tagged.boundary_tag[j, k][~on_x] == WALL).all()

    def test_uncovered_side_rejected(self):
        """Leaving a boundary side without a rule is an error."""
        mesh = build_structured_mesh(2, 2)
        with pytest.raises(ConfigError, match="matches no rule"):
            classify_boundaries(mesh, {"x": "wall"})
        with pytest.raises(ConfigError, match="rule key"):
            classify_boundaries(mesh, {"top": "wall"})
        with pytest.raises(ConfigError, match="tag"):
            classify_boundaries(mesh, {"all": "sponge"})

    def test_internal_walls_survive_classification(self):
        """Pre-existing internal walls keep their tag off the bounding box."""
        mesh = build_structured_mesh(4, 2, (0.0, 4.0, 0.0, 2.0))
        on_line = np.abs(mesh.midpoint[:, :, 0] - 2.0) < 1e-12
        walled = mesh.add_internal_walls(on_line & (mesh.neighbor >= 0))
        tagged = classify_boundaries(walled, {"all": "outflow"})
        j, k = np.nonzero(on_line & (tagged.neighbor < 0))
        assert (tagged.boundary_tag[j, k] == WALL).all(), (
            "internal dam sides must stay walls"
        )


class TestValidationReport:
    """validate_mesh statistics and problem detection."""

    def test_good_mesh_report(self):
        """A healthy mesh reports ok with correct counts."""
        mesh = classify_boundaries(build_structured_mesh(3, 2), {"all": "wall"})
        report = validate_mesh(mesh)
        assert report.ok
        assert report.n_cells == 12 and report.n_boundary_sides == 10
        assert report.boundary_counts == {"wall": 10}
        text = "\n".join(report.lines())
        assert "cells               12" in text
        assert "PROBLEM" not in text

    def test_inverted_cell_flagged(self):
        """A clockwise cell shows up as a non-positive-area problem."""
        verts = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [1.0, 1.0]])
        mesh = compute_geometry(
            verts, np.array([[0, 1, 3], [0, 3, 2]])[:, ::-1], validate=False
        )
        report = validate_mesh(mesh)
        assert not report.ok
        assert any("non-positive area" in p for p in report.problems), (
            f"problems {report.problems} should flag the inverted cells"
        )
        assert any("PROBLEM" in line for line in report.lines())


class TestMeshInvariants:
    """Randomized geometric identities."""

    def test_side_closure(self):
        """Weighted outward normals close around every cell."""
        props.check_mesh_side_closure(25, seed=101)

    def test_height_identity(self):
        """height * side length equals twice the cell area."""
        props.check_mesh_height_identity(25, seed=102)

    def test_total_area(self):
        """Cell areas sum to the rectangle area."""
        props.check_mesh_area_total(25, seed=103)

    def test_orientation(self):
        """All stored cells are counterclockwise."""
        props.check_mesh_orientation(25, seed=104)

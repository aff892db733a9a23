"""Tests for parameter handling and conserved/primitive conversions."""

import numpy as np
import pytest

import properties as props
from swft.errors import PositivityError
from swft.mesh import build_structured_mesh
from swft.state import (
    Bathymetry,
    PhysParams,
    build_bathymetry,
    conserved_from_primitive,
    desingularized_ratio,
    primitive_from_conserved,
)


class TestPhysParams:
    """Validation and resolution of the parameter bundle."""

    def test_defaults(self):
        """Default parameters describe clear water with no friction."""
        p = PhysParams()
        assert p.g == 9.81 and p.n_manning == 0.0 and p.delta == 0.0
        assert p.cfl == 0.8 and p.h_dry == 1e-10 and p.epsilon is None

    def test_rejects_out_of_range(self):
        """Out-of-range parameters are rejected at construction."""
        for kwargs in (
            {"g": 0.0},
            {"n_manning": -0.1},
            {"delta": 1.0},
            {"delta": -0.1},
            {"cfl": 0.0},
            {"cfl": 1.5},
            {"epsilon": 0.0},
            {"h_dry": 0.0},
            {"cfl_mode": "sometimes"},
        ):
            with pytest.raises(ValueError):
                PhysParams(**kwargs)

    def test_epsilon_resolves_against_mesh(self):
        """Unset epsilon becomes (mean edge length)**4; set values persist."""
        mesh = build_structured_mesh(2, 2)
        p = PhysParams().resolved(mesh)
        assert p.epsilon == pytest.approx(mesh.mean_edge_length() ** 4, rel=1e-15)
        q = PhysParams(epsilon=1e-6).resolved(mesh)
        assert q.epsilon == 1e-6, "an explicit epsilon must survive resolution"


class TestDesingularizedRatio:
    """The square-root regularized division."""

    def test_below_threshold_value(self):
        """num=1e-6, den=1e-3, eps=1e-6: the regularized quotient is tiny."""
        out = desingularized_ratio(1e-6, 1e-3, 1e-6)
        assert out == pytest.approx(1.41421e-6, rel=1e-4), (
            f"regularized ratio {out:.6e}, expected 1.41421e-6"
        )
        plain = 1e-6 / 1e-3
        assert out < plain / 100.0, "deep in the regularized regime the ratio shrinks"

    def test_above_threshold_is_plain_ratio(self):
        """den**4 >= eps reduces the formula to num/den to rounding."""
        assert desingularized_ratio(1.0, 1.0, 1e-6) == pytest.approx(1.0, rel=1e-15)
        assert desingularized_ratio(3.0, 2.0, 1e-8) == pytest.approx(1.5, rel=1e-14)

    def test_zero_and_negative_denominator(self):
        """Non-positive denominators give exactly zero."""
        assert desingularized_ratio(5.0, 0.0, 1e-6) == 0.0
        assert desingularized_ratio(5.0, -1.0, 1e-6) == 0.0

    def test_array_broadcast(self):
        """Arrays broadcast elementwise and preserve shape."""
        num = np.array([[1.0, -1.0], [2.0, 0.0]])
        out = desingularized_ratio(num, 2.0, 1e-9)
        assert out.shape == (2, 2)
        assert np.allclose(out, num / 2.0, rtol=1e-14)


class TestConversions:
    """Conserved <-> primitive recoveries."""

    def test_steady_depth_example(self):
        """Clear water at the balance depth recovers u = q/h = 0.398107."""
        p = PhysParams(delta=0.1, epsilon=1e-6)
        U = np.array([[0.251189, 0.1, 0.0, 0.0]])
        prim = primitive_from_conserved(U, p)
        assert prim.h[0] == pytest.approx(0.251189, rel=1e-15)
        assert prim.u[0] == pytest.approx(0.1 / 0.251189, rel=1e-12), (
            f"u = {prim.u[0]:.6f}, expected 0.398107"
        )
        assert prim.c[0] == 0.0 and prim.r[0] == 1.0

    def test_loaded_column_example(self):
        """U=(1.1, 0, 0, 1) with delta=0.1 is unit depth of saturated brine."""
        p = PhysParams(delta=0.1, epsilon=1e-6)
        prim = primitive_from_conserved(np.array([[1.1, 0.0, 0.0, 1.0]]), p)
        assert prim.h[0] == pytest.approx(1.0, rel=1e-15)
        assert prim.c[0] == pytest.approx(1.0, rel=1e-12)
        assert prim.r[0] == pytest.approx(1.1, rel=1e-12)
        assert prim.u[0] == 0.0 and prim.v[0] == 0.0

    def test_assembly_inverts_recovery(self):
        """conserved_from_primitive(1, 0, 0, 1) rebuilds (1.1, 0, 0, 1)."""
        p = PhysParams(delta=0.1)
        U = conserved_from_primitive(1.0, 0.0, 0.0, 1.0, p)
        assert np.allclose(U, [1.1, 0.0, 0.0, 1.0], atol=1e-15)

    def test_dry_cells_zeroed(self):
        """At or below h_dry the velocities and concentration are zeroed."""
        p = PhysParams(delta=0.1, h_dry=1e-6, epsilon=1e-6)
        U = np.array([[5e-7, 1e-3, -1e-3, 1e-7], [0.0, 0.0, 0.0, 0.0]])
        prim = primitive_from_conserved(U, p)
        assert (prim.u == 0.0).all() and (prim.v == 0.0).all()
        assert (prim.c == 0.0).all() and (prim.r == 1.0).all()

    def test_negative_depth_rejected(self):
        """Depths below the negativity tolerance raise PositivityError."""
        p = PhysParams(epsilon=1e-6)
        with pytest.raises(PositivityError):
            primitive_from_conserved(np.array([[-1e-6, 0.0, 0.0, 0.0]]), p)

    def test_speed_magnitude(self):
        """speed() is the Euclidean velocity magnitude."""
        p = PhysParams(epsilon=1e-12)
        U = conserved_from_primitive(2.0, 3.0, 4.0, 0.0, p)
        prim = primitive_from_conserved(U[None, :], p)
        assert prim.speed()[0] == pytest.approx(5.0, rel=1e-12)


class TestBathymetry:
    """Bottom elevation sampling."""

    def test_flat_and_plane(self):
        """Named constructors give exact values and gradients."""
        mesh = build_structured_mesh(3, 2)
        flat = build_bathymetry(mesh, ("flat", 2.5))
        assert (flat.vertex == 2.5).all() and (flat.cell == 2.5).all()
        assert (flat.grad == 0.0).all(), "a flat bottom must have zero gradient"
        plane = build_bathymetry(mesh, ("plane", -0.01, 0.0, 0.1))
        expect = 0.1 - 0.01 * mesh.vertices[:, 0]
        assert np.allclose(plane.vertex, expect, atol=1e-15)
        assert np.allclose(plane.grad[:, 0], -0.01, atol=1e-15)
        assert np.allclose(plane.grad[:, 1], 0.0, atol=1e-15)

    def test_vertex_array_input(self):
        """Raw vertex arrays are linearly interpolated to midpoints."""
        mesh = build_structured_mesh(1, 1)
        z = mesh.vertices[:, 0] ** 2
        bathy = build_bathymetry(mesh, z)
        v = z[mesh.cells]
        assert np.array_equal(bathy.midpoint, 0.5 * (v + np.roll(v, -1, axis=1)))
        assert np.allclose(bathy.cell, v.mean(axis=1), atol=1e-15)
        assert isinstance(bathy, Bathymetry)

    def test_shared_side_agreement(self):
        """The two cells of a square sample the same diagonal midpoint value."""
        mesh = build_structured_mesh(1, 1)
        bathy = build_bathymetry(mesh, mesh.vertices[:, 0] ** 2 + 0.3)
        j, k = np.nonzero(mesh.neighbor >= 0)
        mine = bathy.midpoint[j, k]
        theirs = bathy.midpoint[mesh.neighbor[j, k], mesh.neighbor_slot[j, k]]
        assert np.array_equal(mine, theirs), "shared midpoints must agree bitwise"


class TestStateInvariants:
    """Randomized conversion identities."""

    def test_round_trip(self):
        """Primitive -> conserved -> primitive is the identity when wet."""
        props.check_state_round_trip(25, seed=201)

    def test_depth_closed_form(self):
        """Depth recovery is the exact linear combination q1 - delta*q4."""
        props.check_depth_closed_form(25, seed=202)

    def test_desingularization_bounds(self):
        """Oddness, monotonicity and the two quotient bounds."""
        props.check_desingularization_bounds(25, seed=203)

    def test_bathymetry_continuity(self):
        """Interior bottom midpoints agree; plane gradients are exact."""
        props.check_bathymetry_continuity(25, seed=204)

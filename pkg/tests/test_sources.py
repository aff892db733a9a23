"""Tests for the bottom-slope source, Manning friction and uniform flow."""

import numpy as np
import pytest

import properties as props
from swft.errors import ConfigError
from swft.mesh import build_structured_mesh, classify_boundaries, jitter_mesh
from swft.reconstruction import green_gauss_gradients, minmod_limit
from swft.sources import (
    SteadyProfile,
    friction_implicit_update,
    friction_momentum_magnitude,
    make_steady_profile,
    steady_state_depth,
    topography_source,
)
from swft.state import (
    PhysParams,
    build_bathymetry,
    conserved_from_primitive,
    primitive_from_conserved,
)


class TestSteadyStateDepth:
    """The balanced uniform-flow depth."""

    def test_reference_depths(self):
        """q0=0.1, n=0.1, slope=0.01: 0.251189 for r0=1, 0.23054 for r0=1.1."""
        h0 = steady_state_depth(0.1, 0.1, 0.01, 1.0)
        assert h0 == pytest.approx(0.251189, abs=1e-6), (
            f"h0 = {h0:.6f}, expected 0.251189"
        )
        h1 = steady_state_depth(0.1, 0.1, 0.01, 1.1)
        assert h1 == pytest.approx(0.23054, abs=1e-5), (
            f"h0 = {h1:.6f}, expected 0.23054 for the denser mixture"
        )
        assert h1 < h0, "a denser mixture balances at a shallower depth"

    def test_discharge_scaling(self):
        """Doubling q0 scales the depth by 2**(3/5) = 1.51572."""
        base = steady_state_depth(0.1, 0.1, 0.01)
        assert steady_state_depth(0.2, 0.1, 0.01) / base == pytest.approx(
            2.0**0.6, rel=1e-12
        )

    def test_degenerate_inputs_rejected(self):
        """No balance exists without slope, friction or discharge."""
        with pytest.raises(ConfigError):
            steady_state_depth(0.1, 0.1, 0.0)
        with pytest.raises(ConfigError):
            steady_state_depth(0.1, 0.0, 0.01)
        with pytest.raises(ConfigError):
            steady_state_depth(0.0, 0.1, 0.01)
        with pytest.raises(ConfigError):
            steady_state_depth(0.1, 0.1, 0.01, r0=0.9)

    def test_profile_assembly(self):
        """make_steady_profile wires delta and c0 into r0 and the state."""
        prof = make_steady_profile(0.1, 0.1, 0.01, delta=0.1, c0=1.0)
        assert prof.r0 == pytest.approx(1.1, rel=1e-15)
        assert prof.h0 == pytest.approx(0.23054, abs=1e-5)
        U = prof.conserved()
        assert U.shape == (4,)
        assert U[0] == pytest.approx(prof.h0 * 1.1, rel=1e-15)
        assert U[1] == 0.1 and U[2] == 0.0
        assert U[3] == pytest.approx(prof.h0, rel=1e-15)
        assert isinstance(prof, SteadyProfile)


class TestFriction:
    """The implicit Manning magnitude solve."""

    def test_worked_quadratic_root(self):
        """k=1, m*=2: the positive root of m + m^2 = 2 is exactly 1."""
        m = friction_momentum_magnitude(2.0, 1.0)
        assert m == pytest.approx(1.0, rel=1e-15), f"m = {m}, expected 1"

    def test_no_friction_is_identity(self):
        """k=0 (or n=0, or dt=0) leaves the momentum untouched."""
        assert friction_momentum_magnitude(3.5, 0.0) == 3.5
        p = PhysParams(n_manning=0.0, epsilon=1e-6)
        U = np.array([[1.0, 0.5, -0.25, 0.0]])
        out = friction_implicit_update(U, 0.1, p)
        assert np.array_equal(out, U)
        assert out is not U, "the update must return a fresh array"
        p = PhysParams(n_manning=0.1, epsilon=1e-6)
        assert np.array_equal(friction_implicit_update(U, 0.0, p), U)

    def test_direction_preserved(self):
        """Friction rescales the momentum vector without turning it."""
        p = PhysParams(n_manning=0.2, delta=0.1, epsilon=1e-6)
        rng = np.random.default_rng(6)
        U = conserved_from_primitive(
            rng.uniform(0.1, 2.0, 100), rng.uniform(-3, 3, 100),
            rng.uniform(-3, 3, 100), rng.uniform(0, 1, 100), p,
        )
        out = friction_implicit_update(U, 0.5, p)
        assert np.array_equal(out[:, 0], U[:, 0]), "friction must not touch mass"
        assert np.array_equal(out[:, 3], U[:, 3]), "friction must not touch solute"
        cross = out[:, 1] * U[:, 2] - out[:, 2] * U[:, 1]
        scale = np.abs(U[:, 1:3]).max()
        assert np.abs(cross).max() <= 1e-13 * scale**2, "momentum direction turned"
        dot = out[:, 1] * U[:, 1] + out[:, 2] * U[:, 2]
        assert dot.min() >= 0.0, "friction reversed a momentum vector"
        mag_in = np.hypot(U[:, 1], U[:, 2])
        mag_out = np.hypot(out[:, 1], out[:, 2])
        assert (mag_out <= mag_in * (1 + 1e-14)).all(), "friction added momentum"

    def test_dry_cells_stopped(self):
        """Cells at or below the dry threshold lose their momentum."""
        p = PhysParams(n_manning=0.1, h_dry=1e-6, epsilon=1e-6)
        U = np.array([[5e-7, 1e-3, -2e-3, 0.0]])
        out = friction_implicit_update(U, 0.1, p)
        assert out[0, 1] == 0.0 and out[0, 2] == 0.0, (
            "dry cells must not keep residual momentum"
        )


class TestTopographySource:
    """The two-piece bottom-slope quadrature."""

    def _source_for_constant_state(self, mesh, h, c, delta, bathy_spec):
        p = PhysParams(delta=delta, epsilon=1e-8)
        bathy = build_bathymetry(mesh, bathy_spec)
        U = np.tile(conserved_from_primitive(h, 0.0, 0.0, c, p), (mesh.n_cells, 1))
        prim = primitive_from_conserved(U, p)
        ms = props.reconstruct(U, mesh, p)
        depth = U[:, 0] - p.delta * U[:, 3]
        dgrad = minmod_limit(green_gauss_gradients(depth, mesh), mesh)[:, 0, :]
        return topography_source(ms, dgrad, prim, bathy, mesh, p), p

    def test_flat_bottom_uniform_state_silent(self):
        """Constant state over a flat bottom feels no force at all."""
        mesh = jitter_mesh(build_structured_mesh(4, 3), 0.15, seed=17)
        src, _ = self._source_for_constant_state(mesh, 1.3, 0.4, 0.1, ("flat", 0.2))
        assert np.abs(src).max() <= 1e-12, (
            f"flat-bottom source {np.abs(src).max():.3e}"
        )

    def test_steady_profile_slope_force(self):
        """The uniform-flow state feels exactly g*r0*h0*slope per cell."""
        prof = make_steady_profile(0.1, 0.1, 0.01, delta=0.0, c0=0.0)
        mesh = jitter_mesh(
            build_structured_mesh(6, 3, (0.0, 10.0, 0.0, 5.0)), 0.15, seed=23
        )
        src, p = self._source_for_constant_state(
            mesh, prof.h0, 0.0, 0.0, ("plane", -0.01, 0.0, 0.1)
        )
        expect = 9.81 * prof.h0 * 0.01
        assert expect == pytest.approx(0.0246417, abs=1e-7)
        assert np.abs(src[:, 1] - expect).max() <= 1e-12 * expect, (
            f"slope force deviates by {np.abs(src[:, 1] - expect).max():.3e}"
        )
        assert np.abs(src[:, 2]).max() <= 1e-12 * expect, "cross-slope force appeared"

    def test_general_constant_state_on_plane(self):
        """Any constant state on a plane feels g*rbar*hbar*slope, exactly."""
        mesh = jitter_mesh(build_structured_mesh(5, 4), 0.2, seed=29)
        h, c, delta = 0.8, 0.6, 0.2
        src, p = self._source_for_constant_state(
            mesh, h, c, delta, ("plane", -0.03, 0.02, 0.5)
        )
        r = 1.0 + delta * c
        assert np.abs(src[:, 1] - p.g * r * h * 0.03).max() <= 1e-13, (
            "x slope force must equal g*r*h*slope_x"
        )
        assert np.abs(src[:, 2] + p.g * r * h * 0.02).max() <= 1e-13, (
            "y slope force must equal g*r*h*slope_y"
        )

    def test_mass_and_solute_untouched(self):
        """The source vector has zero mass and solute components."""
        mesh = build_structured_mesh(3, 3)
        src, _ = self._source_for_constant_state(mesh, 1.0, 0.5, 0.1,
                                                 ("plane", 0.1, -0.2, 0.0))
        assert (src[:, 0] == 0.0).all() and (src[:, 3] == 0.0).all()


class TestSourceInvariants:
    """Randomized source-term identities."""

    def test_friction_solve(self):
        """Bounds, direction and the quadratic residual."""
        props.check_friction_solve(25, seed=501)

    def test_balance_identity(self):
        """h0 closes the gravity-friction balance and its scaling law."""
        props.check_balance_identity(25, seed=502)

    def test_steady_decomposition(self):
        """Flux, topography and friction each cancel separately."""
        props.check_steady_decomposition(25, seed=503)

    def test_topography_consistency(self):
        """The source converges to the analytic slope force."""
        props.check_topography_consistency(8, seed=504)

    def test_flat_bottom_neutrality(self):
        """No spurious force from a flat bottom."""
        props.check_flat_bottom_neutrality(12, seed=505)

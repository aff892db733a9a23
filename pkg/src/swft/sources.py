"""Topography and friction source terms, plus the uniform-flow profile.

The topography quadrature is built so that the slope force cancels the
pressure part of the flux divergence exactly for constant conserved
states over a plane bottom: the boundary-integral piece reuses the same
inner traces as the flux assembly, and the split gradient keeps the
depth part limited while the bottom part is the exact plane slope.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numba import njit

from .errors import ConfigError
from .state import _desing_scalar


@njit(cache=True)
def _topo_kernel(inner, wnormal, area, depth_grad, bathy_grad, hbar, rbar, delta, g, out):
    nc = inner.shape[0]
    for j in range(nc):
        accx = 0.0
        accy = 0.0
        for k in range(3):
            q1m = inner[j, k, 0]
            hm = q1m - delta * inner[j, k, 3]
            # r(M) h(M)^2 written as q1(M) h(M): identical algebra, no
            # division, and exact for dry traces.
            prod = q1m * hm
            accx += wnormal[j, k, 0] * prod
            accy += wnormal[j, k, 1] * prod
        coef = 0.5 * g / area[j]
        grh = g * rbar[j] * hbar[j]
        out[j, 0] = coef * accx - grh * (depth_grad[j, 0] + bathy_grad[j, 0])
        out[j, 1] = coef * accy - grh * (depth_grad[j, 1] + bathy_grad[j, 1])


@njit(cache=True)
def _friction_kernel(U, dt, g, n_manning, delta, eps, h_dry, out):
    nc = U.shape[0]
    gn2 = g * n_manning * n_manning
    for j in range(nc):
        q2 = U[j, 1]
        q3 = U[j, 2]
        h = U[j, 0] - delta * U[j, 3]
        if h <= h_dry:
            out[j, 0] = 0.0
            out[j, 1] = 0.0
            continue
        c = _desing_scalar(U[j, 3], h, eps)
        r = 1.0 + delta * c
        k = dt * gn2 * h ** (-7.0 / 3.0) / (r * r)
        mstar = np.sqrt(q2 * q2 + q3 * q3)
        if mstar == 0.0 or k == 0.0:
            out[j, 0] = q2
            out[j, 1] = q3
            continue
        scale = 2.0 / (1.0 + np.sqrt(1.0 + 4.0 * k * mstar))
        out[j, 0] = q2 * scale
        out[j, 1] = q3 * scale


@dataclass(frozen=True)
class SteadyProfile:
    """Uniform flow down a plane where gravity and friction balance.

    The bottom slopes as dZ/dx = -slope with slope > 0; the discharge
    variable (depth * velocity * density) is ``q0`` everywhere, the
    cross-slope momentum is zero, and the depth ``h0`` closes the
    momentum balance.
    """

    h0: float
    q0: float
    r0: float
    c0: float
    slope: float

    def conserved(self) -> np.ndarray:
        """Constant cell state (q1, q2, q3, q4) of the profile."""
        return np.array(
            [self.h0 * self.r0, self.q0, 0.0, self.h0 * self.c0]
        )


def steady_state_depth(q0, n_manning, slope, r0=1.0) -> float:
    """Depth of the balanced uniform flow: (n^2 q0^2 / (r0^3 slope))^(3/10)."""
    if slope <= 0.0:
        raise ConfigError(f"slope must be positive for a balanced profile, got {slope}")
    if n_manning <= 0.0:
        raise ConfigError("frictionless flow has no finite balance depth (n = 0)")
    if q0 == 0.0:
        raise ConfigError("zero discharge has no positive balance depth")
    if r0 < 1.0:
        raise ConfigError(f"mixture density ratio must be >= 1, got {r0}")
    return float((n_manning**2 * q0**2 / (r0**3 * slope)) ** 0.3)


def make_steady_profile(q0, n_manning, slope, delta, c0) -> SteadyProfile:
    """Profile with density ratio implied by the concentration c0."""
    r0 = 1.0 + delta * c0
    h0 = steady_state_depth(q0, n_manning, slope, r0)
    return SteadyProfile(h0=h0, q0=float(q0), r0=float(r0), c0=float(c0), slope=float(slope))


def topography_source(ms, depth_grad, prim, bathy, mesh, p) -> np.ndarray:
    """Momentum source of the sloping bottom, as a (n_cells, 4) rate array.

    Per cell the x-component is

        g/(2|T|) * sum_k wnx_k * q1(M_k) * h(M_k)
        - g * rbar * hbar * (limited d(hbar)/dx + exact dZ/dx)

    with the inner traces of ``ms`` and the limited Green-Gauss gradient
    ``depth_grad`` of the cell-average depth field; the y-component is
    analogous.  Mass and solute components are zero.
    """
    out2 = np.empty((mesh.n_cells, 2))
    _topo_kernel(
        ms.inner, mesh.wnormal, mesh.area,
        np.ascontiguousarray(depth_grad), bathy.grad,
        prim.h, prim.r, p.delta, p.g, out2,
    )
    src = np.zeros((mesh.n_cells, 4))
    src[:, 1] = out2[:, 0]
    src[:, 2] = out2[:, 1]
    return src


def friction_momentum_magnitude(m_star, k):
    """Root m >= 0 of m + k m^2 = m_star, in the subtraction-free form.

    ``m = 2 m* / (1 + sqrt(1 + 4 k m*))`` equals m* exactly when k = 0
    and is monotone decreasing in k.
    """
    m_star = np.asarray(m_star, dtype=np.float64)
    k = np.asarray(k, dtype=np.float64)
    return 2.0 * m_star / (1.0 + np.sqrt(1.0 + 4.0 * k * m_star))


def friction_implicit_update(U, dt, p) -> np.ndarray:
    """Momentum after one implicit Manning friction step of length dt.

    Solves the scalar magnitude equation m + k m^2 = m* per cell with
    k = dt g n^2 h^(-7/3) / r^2, keeping the momentum direction; depth
    and solute are untouched.  Dry cells lose their momentum entirely,
    and n = 0 returns the input unchanged.
    """
    U = np.asarray(U, dtype=np.float64)
    out = U.copy()
    if p.n_manning == 0.0 or dt == 0.0:
        return out
    mom = np.empty((U.shape[0], 2))
    _friction_kernel(
        np.ascontiguousarray(U), dt, p.g, p.n_manning, p.delta, p.epsilon,
        p.h_dry, mom,
    )
    out[:, 1] = mom[:, 0]
    out[:, 2] = mom[:, 1]
    return out

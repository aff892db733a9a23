"""Conserved/primitive state handling for the variable-density model.

The conserved vector per cell is ``U = (q1, q2, q3, q4)`` with

    q1 = h * r      (mass-like, density r = 1 + delta * c)
    q2 = h * u * r  (x momentum)
    q3 = h * v * r  (y momentum)
    q4 = h * c      (solute load)

so the depth is recovered in closed form as ``h = q1 - delta * q4``.
Velocity and concentration recoveries divide by near-dry denominators and
are regularized with the square-root desingularization formula; above the
regularization threshold the formula reduces to the plain ratio.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
from numba import njit

from .errors import GeometryError, PositivityError

_SQRT2 = math.sqrt(2.0)


@dataclass(frozen=True)
class PhysParams:
    """Physical and numerical parameters.

    ``epsilon`` is the desingularization constant (units length**4); when
    left ``None`` it is resolved against a mesh as ``(mean edge length)**4``.
    ``cfl_mode`` selects whether ``cfl`` multiplies the 1/6 stability
    factor in the time-step bound (``"multiply"``) or replaces it
    (``"replace"``).
    """

    g: float = 9.81
    n_manning: float = 0.0
    delta: float = 0.0
    cfl: float = 0.8
    epsilon: float | None = None
    h_dry: float = 1e-10
    cfl_mode: str = "multiply"

    def __post_init__(self):
        if not self.g > 0.0:
            raise ValueError("g must be positive")
        if self.n_manning < 0.0:
            raise ValueError("Manning n must be non-negative")
        if not 0.0 <= self.delta < 1.0:
            raise ValueError("delta must lie in [0, 1)")
        if not 0.0 < self.cfl <= 1.0:
            raise ValueError("cfl must lie in (0, 1]")
        if self.epsilon is not None and not self.epsilon > 0.0:
            raise ValueError("epsilon must be positive")
        if not self.h_dry > 0.0:
            raise ValueError("h_dry must be positive")
        if self.cfl_mode not in ("multiply", "replace"):
            raise ValueError("cfl_mode must be 'multiply' or 'replace'")

    def resolved(self, mesh) -> "PhysParams":
        """Return a copy with ``epsilon`` fixed to a number.

        The default ties the regularization scale to the mesh:
        ``epsilon = (mean edge length)**4``.
        """
        if self.epsilon is not None:
            return self
        return replace(self, epsilon=mesh.mean_edge_length() ** 4)


@njit(cache=True)
def _desing_scalar(num, den, eps):
    if den <= 0.0:
        return 0.0
    d2 = den * den
    d4 = d2 * d2
    m = d4 if d4 > eps else eps
    return _SQRT2 * den * num / np.sqrt(d4 + m)


@njit(cache=True)
def _desing_kernel(num, den, eps, out):
    for i in range(num.shape[0]):
        out[i] = _desing_scalar(num[i], den[i], eps)


def desingularized_ratio(num, den, eps: float):
    """Regularized ``num / den`` for denominators that may vanish.

    Computes ``sqrt(2) * den * num / sqrt(den**4 + max(den**4, eps))``,
    which equals ``num / den`` (to rounding) once ``den**4 >= eps`` and
    fades smoothly to zero with the denominator.  Scalars in, scalar out;
    arrays are broadcast elementwise.
    """
    if eps <= 0.0:
        raise ValueError("eps must be positive")
    num_arr, den_arr = np.broadcast_arrays(
        np.asarray(num, dtype=np.float64), np.asarray(den, dtype=np.float64)
    )
    flat_num = np.ascontiguousarray(num_arr).reshape(-1)
    flat_den = np.ascontiguousarray(den_arr).reshape(-1)
    out = np.empty_like(flat_num)
    _desing_kernel(flat_num, flat_den, float(eps), out)
    out = out.reshape(num_arr.shape)
    if out.ndim == 0:
        return float(out)
    return out


@njit(cache=True)
def _primitive_kernel(q, eps, delta, h_dry, h, u, v, c, r):
    for i in range(q.shape[0]):
        hi = q[i, 0] - delta * q[i, 3]
        h[i] = hi
        if hi <= h_dry:
            u[i] = 0.0
            v[i] = 0.0
            c[i] = 0.0
            r[i] = 1.0
        else:
            ci = _desing_scalar(q[i, 3], hi, eps)
            ri = 1.0 + delta * ci
            den = hi * ri
            c[i] = ci
            r[i] = ri
            u[i] = _desing_scalar(q[i, 1], den, eps)
            v[i] = _desing_scalar(q[i, 2], den, eps)


@dataclass
class PrimitiveState:
    """Pointwise fields recovered from a conserved array."""

    h: np.ndarray
    u: np.ndarray
    v: np.ndarray
    c: np.ndarray
    r: np.ndarray
    w: np.ndarray | None = None  # free surface h + Z, when bottom given

    def speed(self) -> np.ndarray:
        return np.hypot(self.u, self.v)


def primitive_from_conserved(U, p: PhysParams, z=None) -> PrimitiveState:
    """Recover ``(h, u, v, c, r)`` (and ``w`` when ``z`` is given).

    Cells at or below ``h_dry`` get zero velocity and concentration and
    unit density.  A depth below ``-1e-12`` raises :class:`PositivityError`
    naming the first offending entry; tiny negative round-off depths pass
    through unchanged.
    """
    if p.epsilon is None:
        raise ValueError("PhysParams.epsilon unresolved; call p.resolved(mesh)")
    U = np.asarray(U, dtype=np.float64)
    single = U.ndim == 1
    q = np.ascontiguousarray(U.reshape(-1, 4))
    n = q.shape[0]
    h = np.empty(n)
    u = np.empty(n)
    v = np.empty(n)
    c = np.empty(n)
    r = np.empty(n)
    _primitive_kernel(q, p.epsilon, p.delta, p.h_dry, h, u, v, c, r)
    if h.size and h.min() < -1e-12:
        i = int(np.argmin(h))
        raise PositivityError(f"negative depth {h[i]:.3e} at entry {i}")
    shape = U.shape[:-1]
    out = PrimitiveState(
        h=h.reshape(shape), u=u.reshape(shape), v=v.reshape(shape),
        c=c.reshape(shape), r=r.reshape(shape),
    )
    if z is not None:
        out.w = out.h + np.asarray(z, dtype=np.float64).reshape(shape)
    if single:
        for name in ("h", "u", "v", "c", "r", "w"):
            val = getattr(out, name)
            if val is not None:
                setattr(out, name, float(val))
    return out


def conserved_from_primitive(h, u, v, c, p: PhysParams) -> np.ndarray:
    """Assemble ``U = (hr, hur, hvr, hc)`` with ``r = 1 + delta * c``."""
    h, u, v, c = np.broadcast_arrays(
        np.asarray(h, float), np.asarray(u, float),
        np.asarray(v, float), np.asarray(c, float),
    )
    r = 1.0 + p.delta * c
    U = np.stack([h * r, h * u * r, h * v * r, h * c], axis=-1)
    return U


# ---------------------------------------------------------------------------
# Bathymetry


@dataclass(frozen=True)
class Bathymetry:
    """Bottom elevation sampled everywhere the scheme needs it.

    ``vertex`` holds per-vertex values; ``midpoint``, ``cell`` and ``grad``
    are derived from the continuous piecewise-linear interpolant, so the
    midpoint value of a shared side is identical from both cells and the
    per-cell gradient is exact for the interpolant.
    """

    vertex: np.ndarray     # (nv,)
    midpoint: np.ndarray   # (nc, 3)
    cell: np.ndarray       # (nc,)
    grad: np.ndarray       # (nc, 2)


def build_bathymetry(mesh, spec) -> Bathymetry:
    """Sample a bottom description onto a mesh.

    ``spec`` is either ``("flat", z0)``, ``("plane", zx, zy, z0)`` mapping
    ``Z = zx * x + zy * y + z0``, or an array of per-vertex values.
    """
    v = mesh.vertices
    if isinstance(spec, tuple) and spec and spec[0] == "flat":
        vertex = np.full(mesh.n_vertices, float(spec[1]))
    elif isinstance(spec, tuple) and spec and spec[0] == "plane":
        _, zx, zy, z0 = spec
        vertex = float(zx) * v[:, 0] + float(zy) * v[:, 1] + float(z0)
    else:
        vertex = np.asarray(spec, dtype=np.float64)
        if vertex.shape != (mesh.n_vertices,):
            raise GeometryError(
                f"per-vertex bathymetry needs {mesh.n_vertices} values, "
                f"got shape {vertex.shape}"
            )

    tri = vertex[mesh.cells]                     # (nc, 3)
    nxt = vertex[np.roll(mesh.cells, -1, axis=1)]
    midpoint = 0.5 * (tri + nxt)
    cell = tri.mean(axis=1)

    p0 = v[mesh.cells[:, 0]]
    p1 = v[mesh.cells[:, 1]]
    p2 = v[mesh.cells[:, 2]]
    dz1 = tri[:, 1] - tri[:, 0]
    dz2 = tri[:, 2] - tri[:, 0]
    e1 = p1 - p0
    e2 = p2 - p0
    twice_area = 2.0 * mesh.area
    gx = (dz1 * e2[:, 1] - dz2 * e1[:, 1]) / twice_area
    gy = (dz2 * e1[:, 0] - dz1 * e2[:, 0]) / twice_area
    grad = np.column_stack([gx, gy])

    out = Bathymetry(vertex=vertex, midpoint=midpoint, cell=cell, grad=grad)
    for arr in (out.vertex, out.midpoint, out.cell, out.grad):
        arr.setflags(write=False)
    return out

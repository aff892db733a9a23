"""Piecewise-linear reconstruction of cell data at side midpoints.

Gradients come from a Green-Gauss loop with arithmetic side means,
are limited component-by-component with a minmod over the cell's own
gradient and those of its side neighbors, and are finally shrunk by a
single per-cell factor whenever a reconstructed depth trace would go
negative.  The common factor keeps all four conserved components
proportional, which is what preserves uniform concentration fields.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numba import njit

from .errors import PositivityError


@njit(cache=True)
def _green_gauss_kernel(values, neighbor, wnormal, area, grads):
    nc, m = values.shape
    for j in range(nc):
        inv = 1.0 / area[j]
        for comp in range(m):
            gx = 0.0
            gy = 0.0
            for k in range(3):
                i = neighbor[j, k]
                other = values[i, comp] if i >= 0 else values[j, comp]
                mid = 0.5 * (values[j, comp] + other)
                gx += wnormal[j, k, 0] * mid
                gy += wnormal[j, k, 1] * mid
            grads[j, comp, 0] = gx * inv
            grads[j, comp, 1] = gy * inv


@njit(cache=True)
def _minmod_kernel(grads, neighbor, out):
    nc, m = grads.shape[0], grads.shape[1]
    for j in range(nc):
        for comp in range(m):
            for d in range(2):
                best = grads[j, comp, d]
                all_pos = best > 0.0
                all_neg = best < 0.0
                for k in range(3):
                    i = neighbor[j, k]
                    if i < 0:
                        continue
                    cand = grads[i, comp, d]
                    if cand <= 0.0:
                        all_pos = False
                    if cand >= 0.0:
                        all_neg = False
                    if abs(cand) < abs(best):
                        best = cand
                out[j, comp, d] = best if (all_pos or all_neg) else 0.0


@njit(cache=True)
def _trace_kernel(values, grads, offset, inner):
    nc, m = values.shape
    for j in range(nc):
        for k in range(3):
            dx = offset[j, k, 0]
            dy = offset[j, k, 1]
            for comp in range(m):
                inner[j, k, comp] = (
                    values[j, comp]
                    + grads[j, comp, 0] * dx
                    + grads[j, comp, 1] * dy
                )


@njit(cache=True)
def _positivity_kernel(inner, values, delta, alpha):
    nc = values.shape[0]
    bad = -1
    for j in range(nc):
        hmin = inner[j, 0, 0] - delta * inner[j, 0, 3]
        for k in range(1, 3):
            hk = inner[j, k, 0] - delta * inner[j, k, 3]
            if hk < hmin:
                hmin = hk
        if hmin >= 0.0:
            alpha[j] = 1.0
            continue
        hbar = values[j, 0] - delta * values[j, 3]
        if hbar < 0.0:
            bad = j
            alpha[j] = 1.0
            continue
        # Shrink slightly below the exact factor so the corrected minimum
        # trace depth stays non-negative under rounding.
        a = hbar / (hbar - hmin) * (1.0 - 1e-14) if hbar > 0.0 else 0.0
        alpha[j] = a
        for k in range(3):
            for comp in range(4):
                inner[j, k, comp] = values[j, comp] + a * (
                    inner[j, k, comp] - values[j, comp]
                )
    return bad


@njit(cache=True)
def _outer_kernel(inner, neighbor, neighbor_slot, outer):
    nc = inner.shape[0]
    m = inner.shape[2]
    for j in range(nc):
        for k in range(3):
            i = neighbor[j, k]
            if i >= 0:
                ks = neighbor_slot[j, k]
                for comp in range(m):
                    outer[j, k, comp] = inner[i, ks, comp]
            else:
                for comp in range(m):
                    outer[j, k, comp] = inner[j, k, comp]


@dataclass
class MidpointStates:
    """Reconstructed conserved traces at side midpoints.

    ``inner[j, k]`` is cell ``j``'s own reconstruction at the midpoint of
    its side ``k``; ``outer[j, k]`` is the adjacent cell's reconstruction
    at the same point.  On boundary sides ``outer`` starts as a copy of
    ``inner`` and is replaced by the ghost state once boundary conditions
    are applied.
    """

    inner: np.ndarray  # (nc, 3, m)
    outer: np.ndarray  # (nc, 3, m)
    alpha: np.ndarray | None = None  # per-cell positivity factors, once applied


def green_gauss_gradients(values, mesh) -> np.ndarray:
    """Green-Gauss gradient of per-cell data.

    ``values`` has shape (nc,) or (nc, m); the result has shape
    (nc, m, 2).  Side values are arithmetic means of the two adjacent
    cell averages; boundary sides reuse the cell's own average, so a
    globally constant field gets an exactly vanishing boundary closure.
    """
    values = np.asarray(values, dtype=np.float64)
    if values.ndim == 1:
        values = values[:, None]
    values = np.ascontiguousarray(values)
    grads = np.empty((values.shape[0], values.shape[1], 2))
    _green_gauss_kernel(values, mesh.neighbor, mesh.wnormal, mesh.area, grads)
    return grads


def minmod_limit(grads, mesh) -> np.ndarray:
    """Minmod selection over a cell's own and its neighbors' gradients.

    Applied independently per component and direction: if the candidate
    set mixes signs the limited slope is zero, otherwise the candidate of
    smallest magnitude survives.  Boundary cells simply have shorter
    candidate lists.
    """
    grads = np.ascontiguousarray(grads, dtype=np.float64)
    out = np.empty_like(grads)
    _minmod_kernel(grads, mesh.neighbor, out)
    return out


def evaluate_midpoint_states(values, grads, mesh) -> MidpointStates:
    """Evaluate linear reconstructions at all side midpoints."""
    values = np.asarray(values, dtype=np.float64)
    if values.ndim == 1:
        values = values[:, None]
    values = np.ascontiguousarray(values)
    grads = np.ascontiguousarray(grads, dtype=np.float64)
    nc, m = values.shape
    inner = np.empty((nc, 3, m))
    _trace_kernel(values, grads, mesh.offset, inner)
    outer = np.empty_like(inner)
    _outer_kernel(inner, mesh.neighbor, mesh.neighbor_slot, outer)
    return MidpointStates(inner=inner, outer=outer)


def positivity_correct(ms: MidpointStates, values, p, mesh) -> MidpointStates:
    """Rescale reconstructions whose depth trace dips below zero.

    For each offending cell every component's deviation from the cell
    average is multiplied by the same factor
    ``alpha = hbar / (hbar - min_k h(M_k))`` chosen so the smallest
    midpoint depth lands on zero.  Outer traces are refreshed afterwards
    so neighbors see the corrected reconstruction.  Returns a new
    :class:`MidpointStates`; ``ms`` is left untouched.
    """
    values = np.ascontiguousarray(np.asarray(values, dtype=np.float64))
    inner = ms.inner.copy()
    alpha = np.empty(values.shape[0])
    bad = _positivity_kernel(inner, values, p.delta, alpha)
    if bad >= 0:
        raise PositivityError(
            f"cell {bad} has negative average depth; cannot correct traces"
        )
    outer = np.empty_like(inner)
    _outer_kernel(inner, mesh.neighbor, mesh.neighbor_slot, outer)
    return MidpointStates(inner=inner, outer=outer, alpha=alpha)

"""Hopf invariants of the 1:1 resonance and the full phase-space flow.

Phase points are ordered z = (q1, p1, q2, p2), which keeps the circle
action block diagonal.  With z1 = q1 + i p1 and z2 = q2 + i p2:

    I1 = (|z1|^2 + |z2|^2) / 2,   I2 = (|z1|^2 - |z2|^2) / 2,
    I3 + i I4 = conj(z1) z2.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .numeric import PolyEval
from .polyalg import Poly3

LIFT_SYZYGY_TOL = 1e-9
POLE_TOL = 1e-12


class PhasePoint(NamedTuple):
    q1: float
    p1: float
    q2: float
    p2: float


class InvariantVector(NamedTuple):
    I1: float
    I2: float
    I3: float
    I4: float

    @property
    def reduced(self) -> tuple[float, float, float]:
        return (self.I2, self.I3, self.I4)

    def syzygy_residual(self) -> float:
        return abs(self.I1 ** 2 - (self.I2 ** 2 + self.I3 ** 2 + self.I4 ** 2))


@dataclass(frozen=True)
class ReducedPoint:
    x2: float
    x3: float
    x4: float
    r: float

    @property
    def x(self) -> np.ndarray:
        return np.array([self.x2, self.x3, self.x4])

    def sphere_residual(self) -> float:
        return abs(self.x2 ** 2 + self.x3 ** 2 + self.x4 ** 2 - self.r ** 2)


def hopf_map(z) -> InvariantVector:
    q1, p1, q2, p2 = (float(v) for v in z)
    n1 = q1 * q1 + p1 * p1
    n2 = q2 * q2 + p2 * p2
    return InvariantVector(0.5 * (n1 + n2), 0.5 * (n1 - n2),
                           q1 * q2 + p1 * p2, q1 * p2 - q2 * p1)


def hopf_map_array(z) -> np.ndarray:
    """Vectorized hopf_map: shape (..., 4) -> (..., 4)."""
    z = np.asarray(z, dtype=float)
    q1, p1, q2, p2 = z[..., 0], z[..., 1], z[..., 2], z[..., 3]
    n1 = q1 * q1 + p1 * p1
    n2 = q2 * q2 + p2 * p2
    return np.stack([0.5 * (n1 + n2), 0.5 * (n1 - n2), q1 * q2 + p1 * p2, q1 * p2 - q2 * p1], axis=-1)


def s1_act(phi: float, z) -> PhasePoint:
    """Rotate both (q1, p1) and (q2, p2) by the angle phi."""
    c, s = math.cos(phi), math.sin(phi)
    q1, p1, q2, p2 = (float(v) for v in z)
    return PhasePoint(c * q1 - s * p1, s * q1 + c * p1, c * q2 - s * p2, s * q2 + c * p2)


def hopf_lift(v, theta: float = 0.0) -> PhasePoint:
    """A point of the circle fiber over v = (I1, I2, I3, I4), indexed by theta.

    The phase sits on z1 unless v is at the pole I2 = -I1, where z1 = 0 and
    the phase moves to z2.
    """
    I1, I2, I3, I4 = (float(x) for x in v)
    if I1 < 0:
        raise ValueError("I1 must be non-negative")
    scale = max(I1 * I1, np.finfo(float).tiny)
    if abs(I1 * I1 - (I2 * I2 + I3 * I3 + I4 * I4)) > LIFT_SYZYGY_TOL * scale:
        raise ValueError("invariants violate the syzygy; there is no fiber over this point")
    phase = complex(math.cos(theta), math.sin(theta))
    if abs(I1 + I2) < POLE_TOL * I1 or I1 == 0.0:
        z1 = 0j
        z2 = math.sqrt(max(2 * I1, 0.0)) * phase
    else:
        z1 = math.sqrt(max(I1 + I2, 0.0)) * phase
        z2 = complex(I3, I4) / z1.conjugate()
    return PhasePoint(z1.real, z1.imag, z2.real, z2.imag)


def invariant_gradients(z) -> np.ndarray:
    """Rows are the gradients of I1..I4 with respect to (q1, p1, q2, p2)."""
    q1, p1, q2, p2 = (float(v) for v in z)
    return np.array([
        [q1, p1, q2, p2],
        [q1, p1, -q2, -p2],
        [q2, p2, q1, p1],
        [p2, -q2, -p1, q1],
    ])


def symplectic(grad) -> np.ndarray:
    """Canonical field from a gradient: (dH/dp1, -dH/dq1, dH/dp2, -dH/dq2)."""
    g = np.asarray(grad, dtype=float)
    return np.stack([g[..., 1], -g[..., 0], g[..., 3], -g[..., 2]], axis=-1)


class FullFlow:
    """Canonical vector field on R^4 of I1 (optional) + H(I2, I3, I4)."""

    def __init__(self, H: Poly3, include_h2: bool = True):
        self.H = H
        self.include_h2 = include_h2
        self._eval = PolyEval(H)

    def invariant_weights(self, z) -> np.ndarray:
        inv = hopf_map(z)
        g = self._eval.grad(inv.I2, inv.I3, inv.I4)
        return np.array([1.0 if self.include_h2 else 0.0, g[0], g[1], g[2]])

    def __call__(self, z) -> np.ndarray:
        w = self.invariant_weights(z)
        return symplectic(w @ invariant_gradients(z))

    def energy(self, z) -> float:
        inv = hopf_map(z)
        e = self._eval.value(inv.I2, inv.I3, inv.I4)
        return e + (inv.I1 if self.include_h2 else 0.0)


def full_flow_field(z, H: Poly3, include_h2: bool = True) -> np.ndarray:
    """sum_j dH/dI_j (I(z)) * Omega grad I_j(z), with q' = dH/dp, p' = -dH/dq."""
    return FullFlow(H, include_h2)(z)


def rk4_full(flow: FullFlow, z0, dt: float, steps: int) -> np.ndarray:
    """Classical RK4 on R^4; returns all states, shape (steps + 1, 4)."""
    out = np.empty((steps + 1, 4))
    z = np.asarray(z0, dtype=float)
    out[0] = z
    for n in range(steps):
        k1 = flow(z)
        k2 = flow(z + 0.5 * dt * k1)
        k3 = flow(z + 0.5 * dt * k2)
        k4 = flow(z + dt * k3)
        z = z + dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
        out[n + 1] = z
    return out

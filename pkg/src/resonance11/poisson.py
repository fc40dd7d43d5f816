"""Poisson structure on the invariants and the reduced vector field.

Brackets of the generators (I1 is a Casimir):

    {I2, I3} = -2 I4,  {I2, I4} = 2 I3,  {I3, I4} = -2 I2.

This table carries the opposite overall sign to the canonical bracket
sum(df/dq dg/dp - df/dp dg/dq) on R^4 written in the same invariants, so
the reduced field 2 (x cross grad H) is the push-forward of the canonical
flow with time reversed.  Orbits, equilibria and their types are
unaffected.
"""
from __future__ import annotations

from .polyalg import I2, I3, I4, Poly3

_ZERO = Poly3.zero()

_TABLE = {
    (2, 3): -2 * I4,
    (2, 4): 2 * I3,
    (3, 4): -2 * I2,
}


def bracket_generators(i: int, j: int) -> Poly3:
    """{I_i, I_j} for i, j in 1..4."""
    if i not in (1, 2, 3, 4) or j not in (1, 2, 3, 4):
        raise ValueError("generators are I1 .. I4")
    if i == 1 or j == 1 or i == j:
        return _ZERO
    if (i, j) in _TABLE:
        return _TABLE[(i, j)]
    return -_TABLE[(j, i)]


def bracket_table() -> list[list[Poly3]]:
    return [[bracket_generators(i, j) for j in (1, 2, 3, 4)] for i in (1, 2, 3, 4)]


def bracket(f: Poly3, g: Poly3) -> Poly3:
    """{f, g} = sum_{i,j in 2..4} df/dI_i dg/dI_j {I_i, I_j}; I1 is a parameter."""
    df = f.gradient()
    dg = g.gradient()
    out = Poly3.zero()
    for i in range(3):
        if not df[i]:
            continue
        for j in range(3):
            if i == j or not dg[j]:
                continue
            out = out + df[i] * dg[j] * bracket_generators(i + 2, j + 2)
    return out


def reduced_vector_field(H: Poly3) -> tuple[Poly3, Poly3, Poly3]:
    """(dI2/dt, dI3/dt, dI4/dt) = ({I2, H}, {I3, H}, {I4, H})."""
    return tuple(bracket(v, H) for v in (I2, I3, I4))

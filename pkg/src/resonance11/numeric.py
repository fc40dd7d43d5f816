"""Floating-point evaluators for :class:`Poly3`.

Exact polynomials are turned into straight-line Python expressions once,
so the integrators and Newton solvers do not walk term dictionaries in
their inner loops.  The generated callables work on floats and,
elementwise, on numpy arrays.
"""
from __future__ import annotations

import numpy as np

from .polyalg import Poly3

_NAMES = ("x2", "x3", "x4")


def _expr(p: Poly3) -> str:
    parts = []
    for (e2, e3, e4), c in p.sorted_terms():
        factors = [repr(float(c))]
        for name, e in zip(_NAMES, (e2, e3, e4)):
            if e == 1:
                factors.append(name)
            elif e > 1:
                factors.append(f"{name}**{e}")
        parts.append("*".join(factors))
    # keep array shape when every term is constant
    parts.append("0.0*x2")
    return " + ".join(parts)


def _compile(exprs: list[str]):
    src = "lambda x2, x3, x4: (" + ", ".join(exprs) + ("," if len(exprs) == 1 else "") + ")"
    return eval(compile(src, "<poly>", "eval"), {})


class PolyEval:
    """Value, gradient and Hessian of a fixed polynomial in (I2, I3, I4)."""

    def __init__(self, p: Poly3):
        self.poly = p
        g = [p.diff(i) for i in (2, 3, 4)]
        h = [[gi.diff(j) for j in (2, 3, 4)] for gi in g]
        self._value = _compile([_expr(p)])
        self._grad = _compile([_expr(gi) for gi in g])
        self._hess = _compile([_expr(hij) for row in h for hij in row])

    def value(self, x2, x3, x4):
        return self._value(x2, x3, x4)[0]

    def grad(self, x2, x3, x4):
        return self._grad(x2, x3, x4)

    def hess(self, x2, x3, x4):
        return self._hess(x2, x3, x4)

    # array front ends: x has shape (..., 3)
    def value_at(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return np.asarray(self._value(x[..., 0], x[..., 1], x[..., 2])[0])

    def grad_at(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return np.stack(self._grad(x[..., 0], x[..., 1], x[..., 2]), axis=-1)

    def hess_at(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        flat = np.stack(self._hess(x[..., 0], x[..., 1], x[..., 2]), axis=-1)
        return flat.reshape(flat.shape[:-1] + (3, 3))

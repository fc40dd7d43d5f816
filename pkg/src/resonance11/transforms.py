"""Normalization of the reduced Hamiltonian and the five-parameter unfolding.

With I1 treated as a parameter the Hamiltonian is a polynomial in
(I2, I3, I4): a quadratic part H4 and a cubic part H6.  A rotation of
(I2, I3, I4) keeps K = I2^2 + I3^2 + I4^2 fixed, so H4 can always be
brought to diagonal form.  The unfolding adds the linear detunings and two
cubic moduli.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from fractions import Fraction
from pathlib import Path
from typing import Sequence

import numpy as np

from .polyalg import I2, I3, I4, Poly3

GENERATORS = (I2, I3, I4)
K = I2 * I2 + I3 * I3 + I4 * I4


def casimir() -> Poly3:
    """K = I2^2 + I3^2 + I4^2."""
    return K


def _frac(v) -> Fraction:
    if isinstance(v, Fraction):
        return v
    if isinstance(v, float):
        return Fraction(v)
    return Fraction(v)


@dataclass(frozen=True)
class CoeffSet:
    """Coefficients of H4 + H6.

    ``extra_cubic`` holds cubic terms other than the pure powers; it must
    not contain I2^3, I3^3 or I4^3 (those live in ``b``).
    """

    a: tuple[Fraction, Fraction, Fraction]
    b: tuple[Fraction, Fraction, Fraction]
    offdiag: tuple[Fraction, Fraction, Fraction] = (Fraction(0),) * 3
    extra_cubic: Poly3 = field(default_factory=Poly3.zero)

    def __post_init__(self):
        object.__setattr__(self, "a", tuple(_frac(v) for v in self.a))
        object.__setattr__(self, "b", tuple(_frac(v) for v in self.b))
        object.__setattr__(self, "offdiag", tuple(_frac(v) for v in self.offdiag))
        if len(self.a) != 3 or len(self.b) != 3 or len(self.offdiag) != 3:
            raise ValueError("a, b and offdiag need three entries each")
        for e, _ in self.extra_cubic.items():
            if sum(e) != 3 or max(e) == 3:
                raise ValueError("extra_cubic may only hold mixed cubic monomials")

    @classmethod
    def of(cls, a: Sequence, b: Sequence, offdiag: Sequence = (0, 0, 0),
           extra_cubic: Poly3 | None = None) -> "CoeffSet":
        return cls(tuple(a), tuple(b), tuple(offdiag), extra_cubic or Poly3.zero())

    @property
    def is_diagonal(self) -> bool:
        return not any(self.offdiag)

    def quadratic(self) -> Poly3:
        a1, a2, a3 = self.a
        a23, a24, a34 = self.offdiag
        return (a1 * I2 * I2 + a2 * I3 * I3 + a3 * I4 * I4
                + a23 * I2 * I3 + a24 * I2 * I4 + a34 * I3 * I4)

    def cubic(self) -> Poly3:
        b1, b2, b3 = self.b
        return b1 * I2 ** 3 + b2 * I3 ** 3 + b3 * I4 ** 3 + self.extra_cubic

    def hamiltonian(self) -> Poly3:
        return self.quadratic() + self.cubic()

    def quadratic_matrix(self) -> list[list[Fraction]]:
        a1, a2, a3 = self.a
        a23, a24, a34 = (v / 2 for v in self.offdiag)
        return [[a1, a23, a24], [a23, a2, a34], [a24, a34, a3]]

    def nondegenerate(self) -> bool:
        return check_nondegeneracy(self)[0]

    def with_b(self, b: Sequence) -> "CoeffSet":
        return replace(self, b=tuple(_frac(v) for v in b))

    def to_json(self) -> dict:
        return {"a": [str(v) for v in self.a], "b": [str(v) for v in self.b],
                "offdiag": [str(v) for v in self.offdiag],
                "extra_cubic": self.extra_cubic.to_json()}


@dataclass(frozen=True)
class UnfoldingParams:
    mu1: float = 0.0
    mu2: float = 0.0
    mu3: float = 0.0
    mu4: float = 0.0
    mu5: float = 0.0

    @classmethod
    def from_sequence(cls, mu: Sequence) -> "UnfoldingParams":
        if len(mu) != 5:
            raise ValueError("mu needs exactly five entries")
        return cls(*mu)

    def as_tuple(self) -> tuple:
        return (self.mu1, self.mu2, self.mu3, self.mu4, self.mu5)


def check_nondegeneracy(c: CoeffSet) -> tuple[bool, Fraction]:
    """Exact value of (a1-a2)(a2-a3)(a3-a1) b1 b2 b3 and whether it is nonzero."""
    if not c.is_diagonal:
        raise ValueError("nondegeneracy is defined for a diagonal quadratic part")
    a1, a2, a3 = c.a
    b1, b2, b3 = c.b
    value = (a1 - a2) * (a2 - a3) * (a3 - a1) * b1 * b2 * b3
    return value != 0, value


def build_unfolding(c: CoeffSet, mu: UnfoldingParams | Sequence = UnfoldingParams(),
                    require_diagonal: bool = True) -> tuple[Poly3, Poly3]:
    """The unfolded reduced Hamiltonian H(I; mu) (without I1) and K.

    The dynamics tools pass ``require_diagonal=False``; the unfolding terms
    are then simply added to the given quadratic part.
    """
    if require_diagonal and not c.is_diagonal:
        raise ValueError("diagonalize the quadratic part first")
    if not isinstance(mu, UnfoldingParams):
        mu = UnfoldingParams.from_sequence(mu)
    m1, m2, m3, m4, m5 = (_frac(v) for v in mu.as_tuple())
    H = (c.hamiltonian() + m1 * I2 + m2 * I3 + m3 * I4
         + m4 * I2 ** 3 + m5 * I3 ** 3)
    return H, K


def _jacobi_eigh(a: np.ndarray, tol: float = 1e-15, max_sweeps: int = 50):
    """Cyclic Jacobi for a small symmetric matrix; returns (diag, V) with a = V D V^T.

    Each rotation uses phi = atan2(2 a_pq, a_pp - a_qq) / 2, so an already
    diagonal matrix is left alone and no column permutation happens.
    """
    a = np.array(a, dtype=float)
    n = a.shape[0]
    v = np.eye(n)
    scale = max(np.abs(a).max(), 1.0)
    for _ in range(max_sweeps):
        off = math.sqrt(sum(a[p, q] ** 2 for p in range(n) for q in range(n) if p != q))
        if off <= tol * scale:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                if abs(a[p, q]) <= tol * scale:
                    continue
                phi = 0.5 * math.atan2(2 * a[p, q], a[p, p] - a[q, q])
                cs, sn = math.cos(phi), math.sin(phi)
                g = np.eye(n)
                g[p, p] = g[q, q] = cs
                g[p, q] = -sn
                g[q, p] = sn
                a = g.T @ a @ g
                a[p, q] = a[q, p] = 0.0
                v = v @ g
    return np.diag(a).copy(), v


@dataclass(frozen=True)
class Diagonalization:
    rotation: np.ndarray        # old coordinates = rotation @ new coordinates
    coeffs: CoeffSet            # diagonal quadratic part, rotated cubic
    offdiag_residual: float     # largest off-diagonal entry of R^T Q R
    cubic: Poly3                # full rotated cubic (diagonal part + remainder)


def diagonalize_H4(c: CoeffSet, eig_tol: float = 1e-9) -> Diagonalization:
    """Rotate (I2, I3, I4) by SO(3) so that the quadratic part becomes diagonal.

    The cubic part is pulled back through the same rotation.  Output
    coefficients are the exact binary values of the floating-point result.
    Raises ValueError when a rotation is needed but two eigenvalues agree
    within ``eig_tol``.
    """
    q = np.array(c.quadratic_matrix(), dtype=float)
    if not np.all(np.isfinite(q)):
        raise ValueError("quadratic form has non-finite entries")
    if c.is_diagonal:
        evals, rot = np.diag(q).copy(), np.eye(3)
    else:
        evals, rot = _jacobi_eigh(q)
    if np.linalg.det(rot) < 0:
        rot[:, -1] *= -1
    if not c.is_diagonal:
        gaps = [abs(evals[i] - evals[j]) for i in range(3) for j in range(i + 1, 3)]
        scale = max(1.0, float(np.abs(evals).max()))
        if min(gaps) <= eig_tol * scale:
            raise ValueError("quadratic part has a repeated eigenvalue; rotation is not unique")
    pulled = rot.T @ q @ rot
    residual = float(np.abs(pulled - np.diag(np.diag(pulled))).max())
    if c.is_diagonal:
        a_new = c.a
        cubic = c.cubic()
    else:
        a_new = tuple(Fraction(float(v)) for v in np.diag(pulled))
        cubic = c.cubic().compose_linear([[Fraction(float(v)) for v in row] for row in rot])
    b_new = (cubic.coeff((3, 0, 0)), cubic.coeff((0, 3, 0)), cubic.coeff((0, 0, 3)))
    rest = cubic - (b_new[0] * I2 ** 3 + b_new[1] * I3 ** 3 + b_new[2] * I4 ** 3)
    coeffs = CoeffSet(a_new, b_new, (0, 0, 0), rest)
    return Diagonalization(rot, coeffs, residual, cubic)


# config files

_CONFIG_KEYS = {"a", "b", "offdiag", "mu", "extra_cubic"}


def parse_rational(v, allow_float: bool = False) -> Fraction:
    """Accept ints and "p/q" strings; floats only when ``allow_float`` is set."""
    if isinstance(v, bool):
        raise ValueError("booleans are not coefficients")
    if isinstance(v, int):
        return Fraction(v)
    if isinstance(v, float) and allow_float:
        if not math.isfinite(v):
            raise ValueError(f"coefficient must be finite, got {v!r}")
        return Fraction(v)
    if isinstance(v, str):
        return Fraction(v.strip())
    raise ValueError(f"exact coefficient expected (int or 'p/q' string), got {v!r}")


def coeffs_from_config(data: dict, extra_keys: Sequence[str] = (), allow_float: bool = False
                       ) -> tuple[CoeffSet, UnfoldingParams]:
    unknown = set(data) - _CONFIG_KEYS - set(extra_keys)
    if unknown:
        raise ValueError(f"unknown config keys: {sorted(unknown)}")
    try:
        a = [parse_rational(v, allow_float) for v in data["a"]]
        b = [parse_rational(v, allow_float) for v in data["b"]]
    except KeyError as exc:
        raise ValueError(f"config is missing {exc.args[0]!r}") from None
    off = [parse_rational(v, allow_float) for v in data.get("offdiag", [0, 0, 0])]
    extra = Poly3.from_json(data["extra_cubic"]) if "extra_cubic" in data else Poly3.zero()
    mu = [_mu_entry(v) for v in data.get("mu", [0, 0, 0, 0, 0])]
    if len(a) != 3 or len(b) != 3 or len(off) != 3:
        raise ValueError("a, b and offdiag need three entries each")
    return CoeffSet.of(a, b, off, extra), UnfoldingParams.from_sequence(mu)


def _mu_entry(v) -> float:
    if isinstance(v, bool) or not isinstance(v, (int, float, str)):
        raise ValueError(f"mu entries must be numbers, got {v!r}")
    return float(Fraction(v)) if isinstance(v, str) else float(v)


def load_config(path: str | Path, extra_keys: Sequence[str] = (), allow_float: bool = False
                ) -> tuple[CoeffSet, UnfoldingParams, dict]:
    data = json.loads(Path(path).read_text())
    if not isinstance(data, dict):
        raise ValueError("config must be a JSON object")
    c, mu = coeffs_from_config(data, extra_keys, allow_float)
    return c, mu, data

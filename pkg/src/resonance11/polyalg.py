"""Exact rational polynomials in the reduced invariants (I2, I3, I4).

A :class:`Poly3` is a sparse map from exponent triples ``(k2, k3, k4)`` to
:class:`fractions.Fraction` coefficients.  Zero coefficients are never
stored, so two polynomials are equal iff their term maps are equal.

The grading machinery lives here too: degree and leading term of a
series without constant part, the homogeneous projection, monomial bases
(full / sharp / flat) and an incremental exact row-echelon engine used for
every rank computation in :mod:`resonance11.tangent`.
"""
from __future__ import annotations

import heapq
from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations_with_replacement
from numbers import Rational
from typing import Iterable, Mapping, Sequence

VARIABLES = ("I2", "I3", "I4")

Exp = tuple[int, int, int]


def _as_fraction(c) -> Fraction:
    if isinstance(c, Fraction):
        return c
    if isinstance(c, (int, Rational)):
        return Fraction(c)
    if isinstance(c, str):
        return Fraction(c)
    if isinstance(c, float):
        # exact binary value of the float
        return Fraction(c)
    raise TypeError(f"cannot use {type(c).__name__} as an exact coefficient")


class Poly3:
    """Immutable sparse polynomial in I2, I3, I4 with rational coefficients."""

    __slots__ = ("_terms", "_hash")

    def __init__(self, terms: Mapping[Exp, object] | None = None):
        clean: dict[Exp, Fraction] = {}
        if terms:
            for exp, c in terms.items():
                exp = tuple(int(e) for e in exp)
                if len(exp) != 3 or min(exp) < 0:
                    raise ValueError(f"bad exponent {exp!r}")
                c = _as_fraction(c)
                if c:
                    clean[exp] = clean.get(exp, 0) + c
                    if not clean[exp]:
                        del clean[exp]
        self._terms = clean
        self._hash = None

    @classmethod
    def _raw(cls, terms: dict[Exp, Fraction]) -> "Poly3":
        # trusted constructor: caller guarantees canonical form
        p = object.__new__(cls)
        p._terms = terms
        p._hash = None
        return p

    # constructors
    @classmethod
    def zero(cls) -> "Poly3":
        return cls._raw({})

    @classmethod
    def const(cls, c) -> "Poly3":
        c = _as_fraction(c)
        return cls._raw({(0, 0, 0): c} if c else {})

    @classmethod
    def var(cls, i: int) -> "Poly3":
        """The generator I_i for i in {2, 3, 4}."""
        if i not in (2, 3, 4):
            raise ValueError("variables are I2, I3, I4")
        exp = [0, 0, 0]
        exp[i - 2] = 1
        return cls._raw({tuple(exp): Fraction(1)})

    @classmethod
    def monomial(cls, exp: Sequence[int], coeff=1) -> "Poly3":
        return cls({tuple(exp): coeff})

    @property
    def terms(self) -> dict[Exp, Fraction]:
        return dict(self._terms)

    def items(self):
        return self._terms.items()

    def coeff(self, exp: Sequence[int]) -> Fraction:
        return self._terms.get(tuple(exp), Fraction(0))

    def is_zero(self) -> bool:
        return not self._terms

    def __bool__(self):
        return bool(self._terms)

    def __len__(self):
        return len(self._terms)

    # arithmetic
    def _coerce(self, other) -> "Poly3":
        if isinstance(other, Poly3):
            return other
        return Poly3.const(other)

    def __add__(self, other):
        other = self._coerce(other)
        out = dict(self._terms)
        for e, c in other._terms.items():
            s = out.get(e, 0) + c
            if s:
                out[e] = s
            else:
                out.pop(e, None)
        return Poly3._raw(out)

    __radd__ = __add__

    def __neg__(self):
        return Poly3._raw({e: -c for e, c in self._terms.items()})

    def __sub__(self, other):
        return self + (-self._coerce(other))

    def __rsub__(self, other):
        return self._coerce(other) - self

    def __mul__(self, other):
        if not isinstance(other, Poly3):
            c = _as_fraction(other)
            if not c:
                return Poly3.zero()
            return Poly3._raw({e: v * c for e, v in self._terms.items()})
        return self.mul_truncated(other, None)

    __rmul__ = __mul__

    def mul_truncated(self, other: "Poly3", max_degree: int | None) -> "Poly3":
        """Product with all terms of total degree > max_degree dropped."""
        out: dict[Exp, Fraction] = {}
        for (a2, a3, a4), c in self._terms.items():
            da = a2 + a3 + a4
            for (b2, b3, b4), d in other._terms.items():
                if max_degree is not None and da + b2 + b3 + b4 > max_degree:
                    continue
                e = (a2 + b2, a3 + b3, a4 + b4)
                s = out.get(e, 0) + c * d
                if s:
                    out[e] = s
                else:
                    out.pop(e, None)
        return Poly3._raw(out)

    def __truediv__(self, other):
        c = _as_fraction(other)
        return self * (1 / c)

    def __pow__(self, n: int):
        if n < 0:
            raise ValueError("negative power")
        result = Poly3.const(1)
        base = self
        while n:
            if n & 1:
                result = result * base
            n >>= 1
            if n:
                base = base * base
        return result

    def __eq__(self, other):
        if isinstance(other, Poly3):
            return self._terms == other._terms
        if isinstance(other, (int, Fraction)):
            return self._terms == Poly3.const(other)._terms
        return NotImplemented

    def __hash__(self):
        if self._hash is None:
            self._hash = hash(frozenset(self._terms.items()))
        return self._hash

    # calculus
    def diff(self, i: int) -> "Poly3":
        """Partial derivative with respect to I_i, i in {2, 3, 4}."""
        k = i - 2
        out = {}
        for e, c in self._terms.items():
            if e[k]:
                ne = list(e)
                ne[k] -= 1
                out[tuple(ne)] = c * e[k]
        return Poly3._raw(out)

    def gradient(self) -> tuple["Poly3", "Poly3", "Poly3"]:
        return self.diff(2), self.diff(3), self.diff(4)

    def compose_linear(self, matrix) -> "Poly3":
        """Substitute I_old = matrix @ I_new.

        ``matrix`` is a 3x3 nested sequence of exact coefficients; row i
        expresses old variable i as a linear form in the new variables.
        """
        forms = [sum((Poly3.var(j + 2) * _as_fraction(matrix[i][j]) for j in range(3)), Poly3.zero())
                 for i in range(3)]
        out = Poly3.zero()
        cache: dict[tuple[int, int], Poly3] = {}

        def power(i, n):
            if (i, n) not in cache:
                cache[(i, n)] = forms[i] ** n
            return cache[(i, n)]

        for (e2, e3, e4), c in self._terms.items():
            out = out + power(0, e2) * power(1, e3) * power(2, e4) * c
        return out

    # grading
    def degrees(self) -> set[int]:
        return {sum(e) for e in self._terms}

    def max_degree(self) -> int:
        if not self._terms:
            raise ValueError("zero polynomial has no degree")
        return max(sum(e) for e in self._terms)

    def truncate(self, max_degree: int) -> "Poly3":
        return Poly3._raw({e: c for e, c in self._terms.items() if sum(e) <= max_degree})

    def homogeneous_part(self, k: int) -> "Poly3":
        return project_homogeneous(self, k)

    # numerics
    def __call__(self, x2, x3, x4):
        total = 0.0
        for (e2, e3, e4), c in self._terms.items():
            total += float(c) * x2 ** e2 * x3 ** e3 * x4 ** e4
        return total

    def to_float_terms(self) -> tuple[list[Exp], list[float]]:
        exps = sorted(self._terms, key=monomial_sort_key)
        return exps, [float(self._terms[e]) for e in exps]

    # presentation
    def sorted_terms(self) -> list[tuple[Exp, Fraction]]:
        return sorted(self._terms.items(), key=lambda t: monomial_sort_key(t[0]))

    def __repr__(self):
        return f"Poly3({self})"

    def __str__(self):
        if not self._terms:
            return "0"
        parts = []
        for e, c in self.sorted_terms():
            mono = monomial_str(e)
            if mono == "1":
                parts.append(str(c))
            elif c == 1:
                parts.append(mono)
            elif c == -1:
                parts.append("-" + mono)
            else:
                parts.append(f"{c}*{mono}")
        return " + ".join(parts).replace("+ -", "- ")

    def to_json(self) -> dict:
        return {"terms": [{"exp": list(e), "num": str(c.numerator), "den": str(c.denominator)}
                          for e, c in self.sorted_terms()]}

    @classmethod
    def from_json(cls, data: Mapping) -> "Poly3":
        terms = {}
        for t in data["terms"]:
            exp = tuple(int(v) for v in t["exp"])
            if exp in terms:
                raise ValueError(f"duplicate exponent {exp}")
            terms[exp] = Fraction(int(t["num"]), int(t["den"]))
        return cls(terms)


I2, I3, I4 = Poly3.var(2), Poly3.var(3), Poly3.var(4)


def monomial_str(exp: Sequence[int]) -> str:
    factors = []
    for name, e in zip(VARIABLES, exp):
        if e == 1:
            factors.append(name)
        elif e > 1:
            factors.append(f"{name}^{e}")
    return "*".join(factors) if factors else "1"


def parse_monomial(text: str) -> Exp:
    """Inverse of :func:`monomial_str`."""
    exp = [0, 0, 0]
    text = text.strip()
    if text == "1":
        return (0, 0, 0)
    for factor in text.split("*"):
        name, _, power = factor.partition("^")
        if name not in VARIABLES:
            raise ValueError(f"unknown variable in monomial {text!r}")
        exp[VARIABLES.index(name)] += int(power) if power else 1
    return tuple(exp)


def monomial_sort_key(exp: Sequence[int]):
    # graded lex, I2 > I3 > I4: lower degree first, then larger I2 power, ...
    return (sum(exp), tuple(-e for e in exp))


def degree_and_leading(f: Poly3) -> tuple[int, Poly3]:
    """Lowest total degree of ``f`` and the homogeneous part of that degree."""
    if f.is_zero():
        raise ValueError("the zero polynomial has no degree")
    k = min(f.degrees())
    return k, project_homogeneous(f, k)


def degree(f: Poly3) -> int:
    return degree_and_leading(f)[0]


def leading(f: Poly3) -> Poly3:
    return degree_and_leading(f)[1]


def project_homogeneous(f: Poly3, k: int) -> Poly3:
    if k < 0:
        raise ValueError("degree must be non-negative")
    return Poly3._raw({e: c for e, c in f.items() if sum(e) == k})


def homogeneous_exponents(k: int) -> list[Exp]:
    exps = []
    for combo in combinations_with_replacement(range(3), k):
        e = [0, 0, 0]
        for i in combo:
            e[i] += 1
        exps.append(tuple(e))
    return sorted(exps, key=monomial_sort_key)


@dataclass(frozen=True)
class HomogeneousBasis:
    degree: int
    flavor: str
    monomials: tuple[Exp, ...]

    def __len__(self):
        return len(self.monomials)


def monomial_basis(k: int, flavor: str = "full") -> HomogeneousBasis:
    """Monomial basis of the degree-k homogeneous polynomials.

    ``sharp`` keeps only the pure powers I2^k, I3^k, I4^k; ``flat`` is
    everything else.
    """
    if k < 0:
        raise ValueError("degree must be non-negative")
    if flavor not in ("full", "sharp", "flat"):
        raise ValueError(f"unknown flavor {flavor!r}")
    if flavor != "full" and k < 1:
        raise ValueError("sharp/flat bases need k >= 1")
    full = homogeneous_exponents(k)
    sharp = {(k, 0, 0), (0, k, 0), (0, 0, k)}
    if flavor == "full":
        mons = full
    elif flavor == "sharp":
        mons = [e for e in full if e in sharp]
    else:
        mons = [e for e in full if e not in sharp]
    return HomogeneousBasis(k, flavor, tuple(mons))


def jet_basis(max_degree: int, min_degree: int = 1) -> list[Exp]:
    """Monomials of degree min_degree..max_degree in graded order."""
    out: list[Exp] = []
    for k in range(min_degree, max_degree + 1):
        out.extend(homogeneous_exponents(k))
    return out


def jet_dimension(max_degree: int, min_degree: int = 1) -> int:
    return sum((k + 1) * (k + 2) // 2 for k in range(min_degree, max_degree + 1))


class Echelon:
    """Incremental exact row echelon form over Q.

    Columns are positions in a fixed monomial list; every stored row has
    its pivot at its lowest occupied column and a unit pivot entry.
    Because rows are kept in that shape, the rank of the column-truncated
    span (first d columns) equals the number of pivots below d.
    """

    def __init__(self, monomials: Sequence[Exp]):
        self.monomials = list(monomials)
        self.index = {e: i for i, e in enumerate(self.monomials)}
        self.pivots: dict[int, dict[int, Fraction]] = {}

    def __len__(self):
        return len(self.pivots)

    @property
    def rank(self) -> int:
        return len(self.pivots)

    def _row(self, f: Poly3) -> dict[int, Fraction]:
        row = {}
        for e, c in f.items():
            try:
                row[self.index[e]] = c
            except KeyError:
                raise ValueError(f"monomial {monomial_str(e)} is outside the space") from None
        return row

    def reduce(self, row: dict[int, Fraction]) -> dict[int, Fraction]:
        """Eliminate every pivot column from ``row`` (returns a new dict)."""
        row = dict(row)
        pivots = self.pivots
        heap = [c for c in row if c in pivots]
        heapq.heapify(heap)
        seen = set(heap)
        while heap:
            col = heapq.heappop(heap)
            factor = row.get(col)
            if not factor:
                continue
            for j, v in pivots[col].items():
                s = row.get(j, 0) - factor * v
                if s:
                    row[j] = s
                    if j in pivots and j not in seen:
                        seen.add(j)
                        heapq.heappush(heap, j)
                else:
                    row.pop(j, None)
        return row

    def add(self, f: Poly3 | dict[int, Fraction]) -> bool:
        """Insert a vector; returns True if it raised the rank."""
        row = self._row(f) if isinstance(f, Poly3) else dict(f)
        row = self.reduce(row)
        if not row:
            return False
        # no pivot column survives reduction, so the leading column is free
        col = min(row)
        inv = 1 / row[col]
        self.pivots[col] = {j: v * inv for j, v in row.items()}
        return True

    def contains(self, f: Poly3) -> bool:
        return not self.reduce(self._row(f))

    def rank_below(self, ncols: int) -> int:
        return sum(1 for c in self.pivots if c < ncols)

    def copy(self) -> "Echelon":
        other = Echelon.__new__(Echelon)
        other.monomials = self.monomials
        other.index = self.index
        other.pivots = dict(self.pivots)
        return other


def graded_complement(ech: Echelon) -> list[Exp]:
    """Monomials completing the span of ``ech`` to its whole space.

    Degrees are visited from the top down (graded lex inside a degree), so
    the result complements the leading-term space degree by degree; it is
    returned in basis order.
    """
    trial = ech.copy()
    by_degree: dict[int, list[Exp]] = {}
    for e in ech.monomials:
        by_degree.setdefault(sum(e), []).append(e)
    chosen = set()
    for k in sorted(by_degree, reverse=True):
        for e in by_degree[k]:
            if trial.add(Poly3._raw({e: Fraction(1)})):
                chosen.add(e)
    return [e for e in ech.monomials if e in chosen]


def rank_and_complement(vectors: Iterable[Poly3], space: HomogeneousBasis | Sequence[Exp]
                        ) -> tuple[int, list[Exp]]:
    """Exact rank of ``vectors`` and a greedy monomial complement in ``space``.

    See :func:`graded_complement` for the selection order.
    """
    monomials = list(space.monomials) if isinstance(space, HomogeneousBasis) else list(space)
    ech = Echelon(monomials)
    for v in vectors:
        ech.add(v)
    return ech.rank, graded_complement(ech)


def nullspace(rows: Sequence[Sequence], ncols: int) -> list[list[Fraction]]:
    """Basis of {x : rows @ x = 0} over Q, one vector per free column.

    Each basis vector has a 1 in its free column and 0 in the other free
    columns (reduced row echelon convention).
    """
    m = [[_as_fraction(v) for v in r] for r in rows]
    pivot_cols = []
    r = 0
    for c in range(ncols):
        piv = next((i for i in range(r, len(m)) if m[i][c] != 0), None)
        if piv is None:
            continue
        m[r], m[piv] = m[piv], m[r]
        inv = 1 / m[r][c]
        m[r] = [v * inv for v in m[r]]
        for i in range(len(m)):
            if i != r and m[i][c] != 0:
                f = m[i][c]
                m[i] = [a - f * b for a, b in zip(m[i], m[r])]
        pivot_cols.append(c)
        r += 1
        if r == len(m):
            break
    free = [c for c in range(ncols) if c not in pivot_cols]
    basis = []
    for fc in free:
        x = [Fraction(0)] * ncols
        x[fc] = Fraction(1)
        for i, pc in enumerate(pivot_cols):
            x[pc] = -m[i][fc]
        basis.append(x)
    return basis


def determinant(matrix: Sequence[Sequence]) -> Fraction:
    """Exact determinant by fraction Gaussian elimination."""
    m = [[_as_fraction(v) for v in r] for r in matrix]
    n = len(m)
    det = Fraction(1)
    for c in range(n):
        piv = next((i for i in range(c, n) if m[i][c] != 0), None)
        if piv is None:
            return Fraction(0)
        if piv != c:
            m[c], m[piv] = m[piv], m[c]
            det = -det
        det *= m[c][c]
        for i in range(c + 1, n):
            if m[i][c]:
                f = m[i][c] / m[c][c]
                m[i] = [a - f * b for a, b in zip(m[i], m[c])]
    return det

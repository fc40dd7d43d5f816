"""Restricted tangent space of (H, K) and its exact codimension.

Everything here is exact: coefficients are Fractions and ranks come from
:class:`resonance11.polyalg.Echelon`.  The tangent space T1 is realized in
the jet space J_N (polynomials of degree 1..N in I2, I3, I4) as the span of

* m * F_i for monomials m (the ideal generated by F1, F2, F3),
* H^p K^q with p + q >= 1,
* H^p K^q * G_j for j = 1, 2,

all truncated at degree N.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

from .polyalg import (
    Echelon, Exp, Poly3, degree_and_leading, determinant, graded_complement, homogeneous_exponents,
    jet_basis, jet_dimension, monomial_str, nullspace, parse_monomial, project_homogeneous,
)
from .transforms import K, CoeffSet, check_nondegeneracy

DEFAULT_N = 8
CANDIDATE_COMPLEMENT: tuple[Exp, ...] = ((1, 0, 0), (0, 1, 0), (0, 0, 1), (3, 0, 0), (0, 3, 0))
CUBE = {2: (3, 0, 0), 3: (0, 3, 0), 4: (0, 0, 3)}

_ONE = Fraction(1)


class DegenerateError(ValueError):
    """Raised when a construction needs the nondegeneracy condition and it fails."""


@dataclass(frozen=True)
class VectorField3:
    """A polynomial vector field c2 d/dI2 + c3 d/dI3 + c4 d/dI4."""

    components: tuple[Poly3, Poly3, Poly3]

    def __call__(self, f: Poly3) -> Poly3:
        out = Poly3.zero()
        for i, comp in enumerate(self.components):
            if comp:
                out = out + comp * f.diff(i + 2)
        return out

    def __add__(self, other: "VectorField3") -> "VectorField3":
        return VectorField3(tuple(a + b for a, b in zip(self.components, other.components)))

    def __sub__(self, other: "VectorField3") -> "VectorField3":
        return VectorField3(tuple(a - b for a, b in zip(self.components, other.components)))

    def scale(self, c) -> "VectorField3":
        return VectorField3(tuple(comp * c for comp in self.components))

    def __eq__(self, other):
        return isinstance(other, VectorField3) and self.components == other.components

    def __hash__(self):
        return hash(self.components)


_VARS = (Poly3.var(2), Poly3.var(3), Poly3.var(4))


def basis_field(i: int) -> VectorField3:
    """X_1 .. X_9: X_{3t+s+1} = I_{s+2} d/dI_{t+2}."""
    if not 1 <= i <= 9:
        raise ValueError("basis fields are X_1 .. X_9")
    t, s = divmod(i - 1, 3)
    comps = [Poly3.zero()] * 3
    comps[t] = _VARS[s]
    return VectorField3(tuple(comps))


def field_from_xi(xi: Sequence) -> VectorField3:
    """X = 1/2 sum xi_i X_i with constant or polynomial xi_i."""
    if len(xi) != 9:
        raise ValueError("xi needs nine entries")
    comps = [Poly3.zero()] * 3
    for i, x in enumerate(xi, start=1):
        x = x if isinstance(x, Poly3) else Poly3.const(x)
        if not x:
            continue
        t, s = divmod(i - 1, 3)
        comps[t] = comps[t] + x * _VARS[s] * Fraction(1, 2)
    return VectorField3(tuple(comps))


def xk_image(xi: Sequence) -> Poly3:
    """X(K) for X = 1/2 sum xi_i X_i, by the closed formula.

    X(K) = xi1 I2^2 + xi5 I3^2 + xi9 I4^2 + (xi2 + xi4) I2 I3
           + (xi3 + xi7) I2 I4 + (xi6 + xi8) I3 I4
    """
    x = [Fraction(v) for v in xi]
    if len(x) != 9:
        raise ValueError("xi needs nine entries")
    return Poly3({(2, 0, 0): x[0], (0, 2, 0): x[4], (0, 0, 2): x[8],
                  (1, 1, 0): x[1] + x[3], (1, 0, 1): x[2] + x[6], (0, 1, 1): x[5] + x[7]})


def constant_field_solutions(target: Poly3) -> tuple[list[Fraction] | None, list[list[Fraction]]]:
    """Solve X(K) = target over constant xi by exact elimination.

    Returns (particular solution or None, kernel basis).  Only quadratic
    targets can be reached with constant coefficients.
    """
    quad = homogeneous_exponents(2)
    rows = []
    for e in quad:
        rows.append([xk_image([1 if j == i else 0 for j in range(9)]).coeff(e) for i in range(9)])
    kernel = nullspace(rows, 9)
    aug = [r + [-target.coeff(e)] for r, e in zip(rows, quad)]
    if any(sum(e) != 2 for e, _ in target.items()):
        return None, kernel
    sols = nullspace(aug, 10)
    particular = None
    for v in sols:
        if v[9] != 0:
            particular = [c / v[9] for c in v[:9]]
            break
    return particular, kernel


U1 = basis_field(2) - basis_field(4)
U2 = basis_field(3) - basis_field(7)
U3 = basis_field(6) - basis_field(8)
V1 = field_from_xi([1, 0, 0, 0, 1, 0, 0, 0, 1])


def field_hitting(target: Poly3) -> VectorField3:
    """A vector field X with X(K) = target, for target without constant/linear part.

    Each monomial m is split as I_j * (m / I_j) with I_j the first variable
    dividing m, giving the component (m / I_j) / 2 along d/dI_j.  On a
    diagonal quadratic-plus-cubic target this is exactly
    1/2 ((a1 + b1 I2) X_1 + (a2 + b2 I3) X_5 + (a3 + b3 I4) X_9).
    """
    comps: list[dict] = [{}, {}, {}]
    for e, c in target.items():
        if sum(e) < 2:
            raise ValueError("X(K) has no constant or linear terms")
        j = next(i for i in range(3) if e[i])
        q = list(e)
        q[j] -= 1
        comps[j][tuple(q)] = comps[j].get(tuple(q), 0) + c / 2
    return VectorField3(tuple(Poly3(d) for d in comps))


@dataclass(frozen=True)
class GeneratorSet:
    H: Poly3
    F1: Poly3
    F2: Poly3
    F3: Poly3
    G1: Poly3
    G2: Poly3
    U: tuple[VectorField3, VectorField3, VectorField3]
    V: tuple[VectorField3, VectorField3]

    @property
    def F(self) -> tuple[Poly3, Poly3, Poly3]:
        return (self.F1, self.F2, self.F3)

    @property
    def G(self) -> tuple[Poly3, Poly3]:
        return (self.G1, self.G2)


def build_generators(c: CoeffSet) -> GeneratorSet:
    """F_i = U_i(H), G1 = V1(H) - H, G2 = V2(H) for H = H4 + H6."""
    if not c.is_diagonal:
        raise ValueError("diagonalize the quadratic part first")
    H = c.hamiltonian()
    V2 = field_hitting(H)
    gens = GeneratorSet(H=H, F1=U1(H), F2=U2(H), F3=U3(H), G1=V1(H) - H, G2=V2(H),
                        U=(U1, U2, U3), V=(V1, V2))
    for u in gens.U:
        if u(K):
            raise AssertionError("U_i(K) must vanish")
    if V1(K) != K or V2(K) != H:
        raise AssertionError("V1(K) = K and V2(K) = H must hold")
    return gens


def _shift(f: Poly3, exp: Exp, max_degree: int) -> Poly3:
    """m * f truncated at max_degree for a monomial m = I^exp."""
    e2, e3, e4 = exp
    return Poly3._raw({(a + e2, b + e3, d + e4): v for (a, b, d), v in f.items()
                       if a + b + d + e2 + e3 + e4 <= max_degree})


def _hk_powers(H: Poly3, N: int) -> dict[tuple[int, int], Poly3]:
    """H^p K^q truncated at N for 2(p + q) <= N."""
    out = {(0, 0): Poly3.const(1)}
    top = N // 2
    hp = [Poly3.const(1)]
    for _ in range(top):
        hp.append(hp[-1].mul_truncated(H, N))
    kp = [Poly3.const(1)]
    for _ in range(top):
        kp.append(kp[-1].mul_truncated(K, N))
    for p in range(top + 1):
        for q in range(top + 1 - p):
            out[(p, q)] = hp[p].mul_truncated(kp[q], N)
    return out


def _assemble(ideal_gens: Sequence[Poly3], H: Poly3, module_gens: Sequence[Poly3], N: int
              ) -> list[Poly3]:
    vectors = []
    for F in ideal_gens:
        if not F:
            continue
        d = degree_and_leading(F)[0]
        for e in jet_basis(N - d, min_degree=0):
            v = _shift(F, e, N)
            if v:
                vectors.append(v)
    powers = _hk_powers(H, N)
    for (p, q), P in sorted(powers.items()):
        if p + q >= 1 and P:
            vectors.append(P)
    for G in module_gens:
        if not G:
            continue
        dg = degree_and_leading(G)[0]
        for (p, q), P in sorted(powers.items()):
            if dg + 2 * (p + q) <= N:
                v = P.mul_truncated(G, N)
                if v:
                    vectors.append(v)
    return vectors


def tangent_image(c: CoeffSet, N: int, gens: GeneratorSet | None = None) -> list[Poly3]:
    """Spanning set of T1 truncated to J_N (deterministic order)."""
    if N < 3:
        raise ValueError("truncation degree must be at least 3")
    gens = gens or build_generators(c)
    return _assemble(gens.F, gens.H, gens.G, N)


def naive_leading_image(c: CoeffSet, N: int, gens: GeneratorSet | None = None) -> list[Poly3]:
    """The span hoped for by analogy with a Groebner basis: leading terms only.

    Ideal part m * L(F_i); module part L(H)^p K^q * {1, L(G1), L(G2)}.
    Every vector is homogeneous, so this is the associated graded picture.
    """
    gens = gens or build_generators(c)
    lead_f = [degree_and_leading(F)[1] for F in gens.F if F]
    lead_g = [degree_and_leading(G)[1] for G in gens.G if G]
    return _assemble(lead_f, degree_and_leading(gens.H)[1], lead_g, N)


def _echelon_of(vectors: Iterable[Poly3], N: int) -> Echelon:
    ech = Echelon(jet_basis(N))
    for v in sorted(vectors, key=lambda p: (len(p), min(p.degrees()))):
        ech.add(v)
    return ech


def codimension_profile(vectors: Sequence[Poly3], N: int) -> tuple[list[int], Echelon]:
    """Codimension of the truncated span inside J_k for k = 1..N."""
    ech = _echelon_of(vectors, N)
    profile = []
    for k in range(1, N + 1):
        profile.append(jet_dimension(k) - ech.rank_below(jet_dimension(k)))
    return profile, ech


def _certify(ech: Echelon, candidate: Sequence[Exp], N: int) -> bool:
    """span(image) + span(candidate) = J_N with the sum direct."""
    dim = jet_dimension(N)
    if ech.rank + len(candidate) != dim:
        return False
    trial = ech.copy()
    for e in candidate:
        if sum(e) > N or not trial.add(Poly3._raw({tuple(e): _ONE})):
            return False
    return trial.rank == dim


def certify_complement(c: CoeffSet, candidate: Sequence[Exp], N: int = DEFAULT_N) -> bool:
    _, ech = codimension_profile(tangent_image(c, N), N)
    return _certify(ech, candidate, N)


@dataclass
class CodimReport:
    N: int
    codims: list[int]                     # codimension in J_k, k = 1..N
    per_degree: list[int]                 # increments codims[k] - codims[k-1]
    total: int
    complement: list[Exp]                 # greedy monomial complement
    candidate: list[Exp]
    certified: bool
    nondegenerate: bool
    nondegeneracy_value: Fraction
    det_A2: Fraction
    det_A5: Fraction | None
    ranks: list[int] = field(default_factory=list)
    dims: list[int] = field(default_factory=list)

    def to_json(self) -> dict:
        return {
            "N": self.N,
            "per_degree": list(self.per_degree),
            "total": self.total,
            "complement": [monomial_str(e) for e in self.complement],
            "nondegenerate": self.nondegenerate,
            "det_A2": str(self.det_A2),
            "det_A5": str(self.det_A5) if self.det_A5 is not None else None,
            "certified": self.certified,
            "candidate": [monomial_str(e) for e in self.candidate],
            "codim_by_truncation": list(self.codims),
            "ranks": list(self.ranks),
            "dims": list(self.dims),
        }


def codimension_report(c: CoeffSet, N: int = DEFAULT_N,
                       candidate: Sequence[Exp] = CANDIDATE_COMPLEMENT) -> CodimReport:
    """Exact codimension of T1 in J_N, per degree, with complement certificates.

    Degenerate coefficient sets are reported, not rejected.
    """
    if N < 5:
        raise ValueError("truncation degree must be at least 5")
    gens = build_generators(c)
    vectors = tangent_image(c, N, gens)
    codims, ech = codimension_profile(vectors, N)
    per_degree = [codims[0]] + [codims[k] - codims[k - 1] for k in range(1, N)]
    certified = _certify(ech, candidate, N)
    complement = graded_complement(ech)
    nondeg, value = check_nondegeneracy(c)
    _, det2 = sharp_matrix("A2", c, gens=gens)
    try:
        _, det5 = sharp_matrix("A5", c, gens=gens)
    except DegenerateError:
        det5 = None
    dims = [jet_dimension(k) for k in range(1, N + 1)]
    return CodimReport(N=N, codims=codims, per_degree=per_degree, total=codims[-1],
                       complement=complement, candidate=list(candidate), certified=certified,
                       nondegenerate=nondeg, nondegeneracy_value=value, det_A2=det2,
                       det_A5=det5, ranks=[d - k for d, k in zip(dims, codims)], dims=dims)


def degree_complement_certified(c: CoeffSet, pair: Sequence[int]) -> bool:
    """Whether {I_i^3, I_j^3} completes T1 in degree three (pair = (i, j) in {2,3,4})."""
    if len(set(pair)) != 2 or not set(pair) <= {2, 3, 4}:
        raise ValueError("pair must name two distinct generators among 2, 3, 4")
    candidate = [(1, 0, 0), (0, 1, 0), (0, 0, 1)] + [CUBE[i] for i in pair]
    _, ech = codimension_profile(tangent_image(c, 3), 3)
    return _certify(ech, candidate, 3)


# sharp matrices and the degree-five element

_SHARP = {2: [(2, 0, 0), (0, 2, 0), (0, 0, 2)], 5: [(5, 0, 0), (0, 5, 0), (0, 0, 5)]}
# F5 is fixed by (eta21, eta22) = (0, 2/7); this puts unit weight on the a_i^2 b_i
# direction of its sharp column, which is what the closed-form determinant assumes
F5_ETA22 = Fraction(2, 7)
F5_UNKNOWNS = ("xi1", "xi2", "xi3", "eta01", "eta02", "eta03", "eta21", "eta22")


def sharp_projection(f: Poly3, k: int) -> list[Fraction]:
    return [f.coeff((k, 0, 0)), f.coeff((0, k, 0)), f.coeff((0, 0, k))]


def _columns(cols: Sequence[Sequence[Fraction]]) -> list[list[Fraction]]:
    return [[col[i] for col in cols] for i in range(3)]


def _f5_terms(gens: GeneratorSet) -> list[Poly3]:
    I2, I3, I4 = _VARS
    H = gens.H
    return [I2 * I3 * gens.F1, I2 * I4 * gens.F2, I3 * I4 * gens.F3,
            K * K, K * H, H * H, K * gens.G2, H * gens.G2]


@dataclass(frozen=True)
class F5Result:
    poly: Poly3
    weights: dict[str, Fraction]
    solution_dim: int                # dimension of the solution space of Pi_4 = 0


def construct_F5(c: CoeffSet, gens: GeneratorSet | None = None) -> F5Result:
    """Degree-five element of T1 assembled from degree-four pieces.

    Solves Pi_4(F5) = 0 exactly over the eight weights with
    (eta21, eta22) fixed to (0, 2/7).  Raises DegenerateError when no such
    solution exists or when its sharp degree-five part does not complete the
    sharp parts of K*G1 and H*G1.
    """
    gens = gens or build_generators(c)
    terms = _f5_terms(gens)
    quartic = homogeneous_exponents(4)
    rows = [[t.coeff(e) for t in terms] for e in quartic]
    solution_dim = len(nullspace(rows, 8))
    # move the fixed eta22 column to the right-hand side
    reduced = [r[:6] + [r[7] * F5_ETA22] for r in rows]
    sols = [v for v in nullspace(reduced, 7) if v[6] != 0]
    if not sols:
        raise DegenerateError("Pi_4(F5) = 0 has no solution with eta22 fixed")
    v = sols[0]
    weights = [x / v[6] for x in v[:6]] + [Fraction(0), F5_ETA22]
    poly = sum((w * t for w, t in zip(weights, terms) if w), Poly3.zero())
    if any(project_homogeneous(poly, k) for k in range(5)) or not project_homogeneous(poly, 5):
        raise DegenerateError("F5 does not start in degree five")
    G = 2 * gens.G1
    cols = [sharp_projection(K * G, 5), sharp_projection(gens.H * G, 5), sharp_projection(poly, 5)]
    if determinant(_columns(cols)) == 0:
        raise DegenerateError("sharp part of F5 is dependent on those of K*G1 and H*G1")
    return F5Result(poly, dict(zip(F5_UNKNOWNS, weights)), solution_dim)


def sharp_matrix(kind: str, c: CoeffSet, mu4=0, mu5=0, gens: GeneratorSet | None = None
                 ) -> tuple[list[list[Fraction]], Fraction]:
    """The 3x3 sharp-projection matrices for degrees two, three and five.

    Columns are the sharp projections (rows I_2^k, I_3^k, I_4^k) of
      A2: K, H, G2
      A3: H6, mu4 I2^3, mu5 I3^3
      A5: K*H6, H*H6, F5
    where H6 = 2 G1 is the cubic part of H.
    """
    gens = gens or build_generators(c)
    if kind == "A2":
        cols = [sharp_projection(p, 2) for p in (K, gens.H, gens.G2)]
    elif kind == "A3":
        mu4, mu5 = Fraction(mu4), Fraction(mu5)
        cols = [sharp_projection(2 * gens.G1, 3), [mu4, 0, 0], [0, mu5, 0]]
    elif kind == "A5":
        G = 2 * gens.G1
        f5 = construct_F5(c, gens).poly
        cols = [sharp_projection(K * G, 5), sharp_projection(gens.H * G, 5), sharp_projection(f5, 5)]
    else:
        raise ValueError(f"unknown sharp matrix {kind!r}")
    m = _columns([[Fraction(v) for v in col] for col in cols])
    return m, determinant(m)


def closed_form_determinants(c: CoeffSet) -> dict[str, Fraction]:
    a1, a2, a3 = c.a
    b1, b2, b3 = c.b
    v = (a1 - a2) * (a2 - a3) * (a3 - a1)
    return {"A2": v, "A5": v * b1 * b2 * b3}


@dataclass
class ModuliReport:
    base_total: int
    samples: list[dict]
    pairs: dict[str, bool]

    @property
    def consistent(self) -> bool:
        return all(s["total"] == self.base_total and s["certified"] for s in self.samples)

    def to_json(self) -> dict:
        return {"base_total": self.base_total, "consistent": self.consistent,
                "samples": self.samples, "pairs": self.pairs}


def moduli_consistency(c: CoeffSet, samples: Iterable[Sequence], N: int = DEFAULT_N) -> ModuliReport:
    """Re-run the codimension engine with b shifted by (mu4, mu5, 0).

    Also checks which pairs of cubes complement T1 in degree three.
    """
    base = codimension_report(c, N)
    rows = []
    for mu4, mu5 in samples:
        mu4, mu5 = Fraction(mu4), Fraction(mu5)
        b1, b2, b3 = c.b
        shifted = c.with_b((b1 + mu4, b2 + mu5, b3))
        rep = codimension_report(shifted, N)
        rows.append({"mu4": str(mu4), "mu5": str(mu5), "total": rep.total,
                     "certified": rep.certified, "nondegenerate": rep.nondegenerate})
    pairs = {}
    for pair in ((2, 3), (2, 4), (3, 4)):
        name = "+".join(monomial_str(CUBE[i]) for i in pair)
        pairs[name] = degree_complement_certified(c, pair)
    return ModuliReport(base.total, rows, pairs)


def parse_candidate(names: Sequence[str]) -> list[Exp]:
    return [parse_monomial(n) for n in names]

import random
from fractions import Fraction

import pytest
import sympy as sp

from resonance11.polyalg import Poly3, homogeneous_exponents
from resonance11.transforms import CoeffSet

X2, X3, X4 = sp.symbols("I2 I3 I4")


def rand_frac(rng: random.Random, num: int = 9, den: int = 7, nonzero: bool = False) -> Fraction:
    while True:
        v = Fraction(rng.randint(-num, num), rng.randint(1, den))
        if v or not nonzero:
            return v


def rand_poly(rng: random.Random, max_degree: int, min_degree: int = 0, density: float = 0.5) -> Poly3:
    terms = {}
    for k in range(min_degree, max_degree + 1):
        for e in homogeneous_exponents(k):
            if rng.random() < density:
                terms[e] = rand_frac(rng)
    return Poly3(terms)


def rand_coeffset(rng: random.Random, nondegenerate: bool = True) -> CoeffSet:
    while True:
        a = [rand_frac(rng) for _ in range(3)]
        b = [rand_frac(rng, nonzero=True) for _ in range(3)]
        c = CoeffSet.of(a, b)
        if not nondegenerate or c.nondegenerate():
            return c


def to_sympy(p: Poly3):
    return sum((sp.Rational(c.numerator, c.denominator) * X2 ** e[0] * X3 ** e[1] * X4 ** e[2]
                for e, c in p.items()), sp.Integer(0))


def from_sympy(expr) -> Poly3:
    poly = sp.Poly(sp.expand(expr), X2, X3, X4)
    return Poly3({m: Fraction(int(c.p), int(c.q)) for m, c in poly.terms()})


@pytest.fixture
def rng():
    return random.Random(20240611)


_CRITERIA: dict[int, list[str]] = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None or rep.when not in ("setup", "call"):
        return
    if rep.when == "setup" and rep.passed:
        return
    n = mark.args[0]
    ok = rep.passed and not hasattr(rep, "wasxfail")
    _CRITERIA.setdefault(n, []).append("PASS" if ok else "FAIL")


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n): acceptance criterion number")


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_CRITERIA):
        verdict = "PASS" if all(v == "PASS" for v in _CRITERIA[n]) else "FAIL"
        terminalreporter.write_line(f"{verdict} criterion {n}")
    passed = sum(all(v == "PASS" for v in vs) for vs in _CRITERIA.values())
    terminalreporter.write_line(f"{passed}/{len(_CRITERIA)} criteria pass")

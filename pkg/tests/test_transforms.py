import json
import math
from fractions import Fraction

import numpy as np
import pytest

from resonance11.polyalg import I2, I3, I4, Poly3
from resonance11.transforms import (
    K, CoeffSet, UnfoldingParams, build_unfolding, check_nondegeneracy, coeffs_from_config,
    diagonalize_H4, load_config, parse_rational,
)


def test_build_unfolding_examples():
    zero = CoeffSet.of((0, 0, 0), (0, 0, 0))
    assert build_unfolding(zero, UnfoldingParams()) == (Poly3.zero(), K)
    c = CoeffSet.of((1, 2, 4), (1, 1, 1))
    H, _ = build_unfolding(c, (0, 0, 0, 0, 0))
    assert H == I2 ** 2 + 2 * I3 ** 2 + 4 * I4 ** 2 + I2 ** 3 + I3 ** 3 + I4 ** 3
    H, _ = build_unfolding(c, (0, 0, 0, -1, 0))
    assert H.coeff((3, 0, 0)) == 0
    H, _ = build_unfolding(c, (Fraction(1, 2), 2, -3, 0, 5))
    assert H.coeff((1, 0, 0)) == Fraction(1, 2) and H.coeff((0, 0, 1)) == -3
    assert H.coeff((0, 3, 0)) == 6


def test_unfolding_needs_diagonal_form_unless_waived():
    c = CoeffSet.of((1, 2, 4), (1, 1, 1), offdiag=(1, 0, 0))
    with pytest.raises(ValueError):
        build_unfolding(c)
    H, _ = build_unfolding(c, require_diagonal=False)
    assert H.coeff((1, 1, 0)) == 1


def test_nondegeneracy_examples():
    assert check_nondegeneracy(CoeffSet.of((1, 2, 4), (1, 1, 1))) == (True, Fraction(6))
    assert check_nondegeneracy(CoeffSet.of((1, 1, 2), (3, -1, 2))) == (False, 0)
    assert check_nondegeneracy(CoeffSet.of((1, 2, 5), (1, 0, 1)))[0] is False


def test_nondegeneracy_under_axis_permutations(rng):
    from itertools import permutations
    from conftest import rand_coeffset
    for _ in range(10):
        c = rand_coeffset(rng, nondegenerate=False)
        _, v = check_nondegeneracy(c)
        for p in permutations(range(3)):
            cp = CoeffSet.of([c.a[i] for i in p], [c.b[i] for i in p])
            _, vp = check_nondegeneracy(cp)
            assert abs(vp) == abs(v)


def test_diagonalize_identity_on_diagonal_input():
    c = CoeffSet.of((1, 2, 4), (1, -1, 3))
    d = diagonalize_H4(c)
    assert np.array_equal(d.rotation, np.eye(3))
    assert d.coeffs == c


def test_diagonalize_single_offdiagonal():
    d = diagonalize_H4(CoeffSet.of((0, 0, 0), (0, 0, 0), offdiag=(1, 0, 0)))
    assert [float(v) for v in d.coeffs.a] == pytest.approx([0.5, -0.5, 0.0], abs=1e-15)
    s = math.sqrt(0.5)
    assert np.allclose(np.abs(d.rotation[:2, :2]), s, atol=1e-12)
    assert np.linalg.det(d.rotation) == pytest.approx(1.0, abs=1e-12)


def test_diagonalize_random_forms(rng):
    from conftest import rand_frac
    for _ in range(20):
        c = CoeffSet.of([rand_frac(rng) for _ in range(3)], [rand_frac(rng) for _ in range(3)],
                        offdiag=[rand_frac(rng) for _ in range(3)])
        q = np.array(c.quadratic_matrix(), dtype=float)
        ev = np.linalg.eigvalsh(q)
        if min(np.diff(ev)) < 1e-6:
            continue
        d = diagonalize_H4(c)
        R = d.rotation
        assert np.allclose(R.T @ R, np.eye(3), atol=1e-12)
        assert np.linalg.det(R) == pytest.approx(1.0, abs=1e-12)
        assert d.offdiag_residual <= 1e-10
        assert sorted(float(v) for v in d.coeffs.a) == pytest.approx(sorted(ev), abs=1e-10)
        # K is carried to itself
        Kr = K.compose_linear([[Fraction(float(v)) for v in row] for row in R])
        assert all(abs(float((Kr - K).coeff(e))) <= 1e-10 for e, _ in (Kr - K).items())
        # the cubic is pulled back through the same rotation, remainder kept
        x = np.array([0.3, -0.4, 0.5])
        y = R @ x
        assert d.cubic(*x) == pytest.approx(c.cubic()(*y), abs=1e-10)
        full = d.coeffs.cubic()
        assert full(*x) == pytest.approx(d.cubic(*x), abs=1e-12)


def test_diagonalize_rejects_repeated_eigenvalue():
    c = CoeffSet.of((1, 1, 3), (1, 1, 1), offdiag=(0, 0, Fraction(1, 10**12)))
    with pytest.raises(ValueError):
        diagonalize_H4(c)


def test_config_parsing(tmp_path):
    p = tmp_path / "c.json"
    p.write_text(json.dumps({"a": ["1", "2", "4"], "b": [1, "1/3", "-2"], "mu": [0.5, 0, 0, 0, "1/4"]}))
    c, mu, _ = load_config(p)
    assert c.b == (1, Fraction(1, 3), -2)
    assert mu.as_tuple() == (0.5, 0, 0, 0, 0.25)
    with pytest.raises(ValueError):
        coeffs_from_config({"a": [1, 2, 4], "b": [1, 1, 1], "colour": 3})
    with pytest.raises(ValueError):
        coeffs_from_config({"a": [1.5, 2, 4], "b": [1, 1, 1]})
    c, _ = coeffs_from_config({"a": [1.5, 2, 4], "b": [1, 1, 1]}, allow_float=True)
    assert c.a[0] == Fraction(3, 2)
    with pytest.raises(ValueError):
        coeffs_from_config({"a": [1, 2], "b": [1, 1, 1]})
    with pytest.raises(ValueError):
        coeffs_from_config({"b": [1, 1, 1]})
    with pytest.raises(ValueError):
        parse_rational(True)


def test_extra_cubic_must_be_mixed():
    with pytest.raises(ValueError):
        CoeffSet.of((1, 2, 3), (1, 1, 1), extra_cubic=I2 ** 3)
    c = CoeffSet.of((1, 2, 3), (1, 1, 1), extra_cubic=I2 * I4 ** 2)
    assert c.cubic().coeff((1, 0, 2)) == 1

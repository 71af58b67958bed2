"""Coefficient arithmetic, polynomial ring laws, exact division, resultants.

Resultant values are checked two ways: small frozen cases worked out by hand,
and a numeric cross-check against the root-product formula
res(p, q) = lc(p)^deg(q) * prod_i q(alpha_i) with alpha_i the roots of p.
"""
import random
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from shrubfield.poly_core import (
    GaussInt,
    Polynomial,
    UniPoly,
    bareiss_determinant,
    coeff_exact_div,
    format_rational,
    gauss_exact_div,
    parse_point,
    parse_rational,
    poly_exact_div,
    rational_circle_point,
    rational_point,
    split_re_im,
    sylvester_matrix,
    sylvester_resultant,
)

V2 = ("x", "y")


def _poly_strategy(variables=V2, max_exp=3, max_terms=4):
    exps = st.tuples(
        *[st.integers(min_value=0, max_value=max_exp) for _ in variables]
    )
    coeff = st.integers(min_value=-9, max_value=9)
    return st.dictionaries(exps, coeff, max_size=max_terms).map(
        lambda d: Polynomial(variables, d)
    )


polys = _poly_strategy()


# -- ring laws -----------------------------------------------------------


@given(polys, polys, polys)
@settings(max_examples=60)
def test_ring_laws(a, b, c):
    assert a + b == b + a
    assert a * b == b * a
    assert (a + b) + c == a + (b + c)
    assert (a * b) * c == a * (b * c)
    assert a * (b + c) == a * b + a * c
    assert a + Polynomial.zero(V2) == a
    assert a * Polynomial.constant(1, V2) == a


@given(polys)
def test_sub_and_neg(a):
    assert a - a == Polynomial.zero(V2)
    assert -(-a) == a


@given(polys, st.integers(min_value=0, max_value=4))
@settings(max_examples=30)
def test_pow_is_repeated_mul(a, n):
    expect = Polynomial.constant(1, V2)
    for _ in range(n):
        expect = expect * a
    assert a**n == expect


# -- evaluation ----------------------------------------------------------


@given(polys, st.integers(-5, 5), st.integers(-5, 5))
@settings(max_examples=60)
def test_horner_matches_direct(p, xv, yv):
    direct = sum(
        c * xv**e[0] * yv**e[1] for e, c in p.terms.items()
    )
    assert p.evaluate((xv, yv)) == direct


def test_evaluate_exact_rational():
    p = Polynomial.from_text("1*x^2 + 2*x*y + 1*y^2 + -3*y", V2)
    assert p.evaluate((Fraction(1, 2), Fraction(1, 3))) == Fraction(-11, 36)


# -- calculus ------------------------------------------------------------


@given(polys, polys)
@settings(max_examples=40)
def test_diff_product_rule(a, b):
    left = (a * b).diff("x")
    right = a.diff("x") * b + a * b.diff("x")
    assert left == right


def test_diff_basic():
    p = Polynomial.from_text("3*x^4 + -2*x*y + 7", V2)
    assert p.diff("x") == Polynomial.from_text("12*x^3 + -2*y", V2)
    assert p.diff("y") == Polynomial.from_text("-2*x", V2)


# -- substitution --------------------------------------------------------


def test_substitute_affine():
    p = Polynomial.from_text("1*x^2 + 1*y^2", V2)
    u = Polynomial.from_text("1*x + 1", V2)
    v = Polynomial.from_text("1*y + -2", V2)
    q = p.substitute({"x": u, "y": v})
    assert q == Polynomial.from_text("1*x^2 + 1*y^2 + 2*x + -4*y + 5", V2)


@given(polys, st.integers(-3, 3), st.integers(-3, 3))
@settings(max_examples=30)
def test_substitute_consistent_with_eval(p, xv, yv):
    shift = {
        "x": Polynomial.from_text("1*x + 1", V2),
        "y": Polynomial.from_text("1*y + -1", V2),
    }
    q = p.substitute(shift)
    assert q.evaluate((xv, yv)) == p.evaluate((xv + 1, yv - 1))


# -- text form -----------------------------------------------------------


@given(polys)
def test_text_roundtrip(p):
    assert Polynomial.from_text(p.to_text(), V2) == p


def test_text_with_gaussian_and_fraction():
    p = Polynomial(V2, {(1, 0): GaussInt(0, 2), (0, 0): Fraction(-1, 2)})
    text = p.to_text()
    assert text == "(0,2)*x + -1/2"
    assert Polynomial.from_text(text, V2) == p


def test_text_term_order_is_graded_lex():
    p = Polynomial.from_text("1*y^3 + 1*x^2 + 1*x*y + 1", V2)
    assert p.to_text() == "1*y^3 + 1*x^2 + 1*x*y + 1"


# -- exact division ------------------------------------------------------


@given(polys, polys)
@settings(max_examples=60)
def test_exact_div_roundtrip(a, b):
    if not b:
        return
    assert poly_exact_div(a * b, b) == a


def test_exact_div_rejects_nondivisor():
    x = Polynomial.variable("x", V2)
    y = Polynomial.variable("y", V2)
    with pytest.raises(ValueError):
        poly_exact_div(x * x + y, x + 1)


# -- determinants --------------------------------------------------------


def test_bareiss_matches_numpy_on_random_int_matrices():
    rng = random.Random(7)
    for _ in range(40):
        n = rng.randint(1, 6)
        m = [[rng.randint(-9, 9) for _ in range(n)] for _ in range(n)]
        exact = bareiss_determinant(m)
        approx = np.linalg.det(np.array(m, dtype=float))
        assert exact == round(approx), m


def test_bareiss_singular_and_pivot_swap():
    assert bareiss_determinant([[1, 2], [2, 4]]) == 0
    assert bareiss_determinant([[0, 1], [1, 0]]) == -1
    assert bareiss_determinant([[0, 0], [0, 0]]) == 0


def test_bareiss_polynomial_entries():
    x = Polynomial.variable("x", V2)
    y = Polynomial.variable("y", V2)
    one = Polynomial.constant(1, V2)
    det = bareiss_determinant([[x, y], [y, x]])
    assert det == x * x - y * y
    det3 = bareiss_determinant([[x, one, 0], [0, x, one], [one, 0, x]])
    assert det3 == x**3 + 1


# -- resultants ----------------------------------------------------------


def test_sylvester_shape():
    one = Polynomial.constant(1, V2)
    p = UniPoly.from_dict("t", {2: one, 0: one})
    q = UniPoly.from_dict("t", {3: one, 1: -one})
    m = sylvester_matrix(p, q)
    assert len(m) == 5 and all(len(r) == 5 for r in m)
    assert m[0][0] == one and m[0][2] == one


def test_resultant_frozen_values():
    one = Polynomial.constant(1, V2)
    p = UniPoly.from_dict("t", {2: one, 0: one})
    q = UniPoly.from_dict("t", {2: one, 0: -one})
    assert sylvester_resultant(p, q) == Polynomial.constant(4, V2)

    x = Polynomial.variable("x", V2)
    y = Polynomial.variable("y", V2)
    a = UniPoly.from_dict("t", {1: one, 0: -x})
    b = UniPoly.from_dict("t", {1: one, 0: -y})
    assert sylvester_resultant(a, b) == x - y


def test_resultant_zero_iff_common_root():
    one = Polynomial.constant(1, V2)
    x = Polynomial.variable("x", V2)
    # p = (t - x)(t - 1), q = (t - x)(t + 2) share the root t = x
    p = UniPoly.from_dict("t", {2: one, 1: -x - 1, 0: x})
    q = UniPoly.from_dict("t", {2: one, 1: -x + 2, 0: -2 * x})
    assert sylvester_resultant(p, q) == Polynomial.zero(V2)


def test_resultant_matches_root_product():
    rng = random.Random(11)
    for _ in range(30):
        dp = rng.randint(2, 4)
        dq = rng.randint(2, 4)
        pc = [rng.randint(-5, 5) for _ in range(dp)] + [rng.randint(1, 5)]
        qc = [rng.randint(-5, 5) for _ in range(dq)] + [rng.randint(1, 5)]
        p = UniPoly.from_dict("t", dict(enumerate(pc)))
        q = UniPoly.from_dict("t", dict(enumerate(qc)))
        exact = sylvester_resultant(p, q)
        roots = np.roots(list(reversed(pc)))
        qv = np.polyval(list(reversed(qc)), roots)
        oracle = pc[-1] ** dq * np.prod(qv)
        assert abs(exact - oracle.real) <= 1e-6 * max(1.0, abs(exact))
        assert abs(oracle.imag) <= 1e-6 * max(1.0, abs(exact))


def test_resultant_multiplicative_in_first_argument():
    rng = random.Random(3)
    for _ in range(10):
        a = UniPoly.from_dict(
            "t", {0: rng.randint(-4, 4), 1: rng.randint(1, 4)}
        )
        b = UniPoly.from_dict(
            "t", {0: rng.randint(-4, 4), 1: rng.randint(1, 3), 2: rng.randint(1, 3)}
        )
        q = UniPoly.from_dict(
            "t", {0: rng.randint(-4, 4), 1: rng.randint(-4, 4), 2: rng.randint(1, 3)}
        )
        ab_coeffs: dict[int, int] = {}
        for i, ca in enumerate(a.coeffs):
            for j, cb in enumerate(b.coeffs):
                ab_coeffs[i + j] = ab_coeffs.get(i + j, 0) + ca * cb
        ab = UniPoly.from_dict("t", ab_coeffs)
        assert sylvester_resultant(ab, q) == sylvester_resultant(
            a, q
        ) * sylvester_resultant(b, q)


# -- gaussian split ------------------------------------------------------


def test_split_re_im():
    p = Polynomial(
        V2, {(2, 0): GaussInt(1, 0), (1, 0): GaussInt(0, 2), (0, 0): GaussInt(3, -4)}
    )
    re_p, im_p = split_re_im(p)
    assert re_p == Polynomial.from_text("1*x^2 + 3", V2)
    assert im_p == Polynomial.from_text("2*x + -4", V2)


def test_unipoly_basics():
    p = UniPoly.from_dict("t", {3: 2, 0: -1, 5: 0})
    assert p.degree == 3
    assert p.leading_coeff() == 2
    assert p.evaluate(2) == 15
    assert UniPoly.from_dict("t", {}).is_zero()


# -- coefficient layer ----------------------------------------------------

gauss = st.builds(
    GaussInt,
    st.integers(min_value=-50, max_value=50),
    st.integers(min_value=-50, max_value=50),
)


@given(gauss, gauss)
def test_gauss_mul_matches_complex(a, b):
    c = a * b
    assert complex(c.re, c.im) == complex(a.re, a.im) * complex(b.re, b.im)


@given(gauss, gauss)
def test_gauss_exact_div_roundtrip(a, b):
    if not b:
        return
    q = gauss_exact_div(a * b, b)
    assert q == a


def test_gauss_div_rejects_inexact():
    with pytest.raises(ValueError):
        gauss_exact_div(GaussInt(1, 0), GaussInt(2, 0))
    with pytest.raises(ZeroDivisionError):
        gauss_exact_div(GaussInt(1, 0), GaussInt(0, 0))


def test_gauss_int_interop():
    assert GaussInt(3, 0) == 3
    assert GaussInt(3, 1) != 3
    assert hash(GaussInt(7, 0)) == hash(7)
    assert 2 * GaussInt(1, 1) == GaussInt(2, 2)
    assert GaussInt(1, 1) + 1 == GaussInt(2, 1)
    assert 1 - GaussInt(0, 1) == GaussInt(1, -1)


def test_coeff_exact_div_dispatch():
    assert coeff_exact_div(6, 3) == 2
    assert coeff_exact_div(1, 2) == Fraction(1, 2)
    assert coeff_exact_div(Fraction(1, 3), Fraction(2, 3)) == Fraction(1, 2)
    assert coeff_exact_div(GaussInt(0, 2), GaussInt(1, 1)) == GaussInt(1, 1)


@given(st.fractions(max_denominator=10**6))
def test_rational_text_roundtrip(q):
    assert parse_rational(format_rational(q)) == q


def test_rational_text_forms():
    assert format_rational(Fraction(3, 1)) == "3"
    assert format_rational(Fraction(-1, 2)) == "-1/2"
    assert parse_rational("7") == 7
    with pytest.raises(ValueError):
        parse_rational("1.5")


def test_point_roundtrip():
    pt = (Fraction(1, 3), Fraction(-2, 7))
    assert parse_point(rational_point(pt)) == pt


@given(st.fractions(max_denominator=1000))
def test_rational_circle_point_on_circle(t):
    x, y = rational_circle_point(t)
    assert x * x + y * y == 1

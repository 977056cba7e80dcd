import random
from fractions import Fraction

import numpy as np
import pytest
import sympy
from hypothesis import given, settings
from hypothesis import strategies as st

from azpair.bigpoly import (
    DegenerateResultantError,
    IntBinaryForm,
    IntPolynomial,
    content_primitive,
    poly_mul,
    resultant_binary,
    resultant_sylvester,
    resultant_with_parameters,
)

small_ints = st.integers(min_value=-9, max_value=9)


def forms(min_degree=0, max_degree=4):
    return st.integers(min_degree, max_degree).flatmap(
        lambda m: st.lists(small_ints, min_size=m + 1, max_size=m + 1).map(lambda c: IntBinaryForm(m, tuple(c)))
    )


def sympy_resultant(F: IntBinaryForm, G: IntBinaryForm) -> int:
    """Independent oracle: sympy's determinant of the Sylvester matrix."""
    m, n = F.degree, G.degree
    rows = []
    f = list(F.coeffs)
    g = list(G.coeffs)
    for i in range(n):
        rows.append([0] * i + f + [0] * (n - 1 - i))
    for i in range(m):
        rows.append([0] * i + g + [0] * (m - 1 - i))
    if not rows:
        return 1
    return int(sympy.Matrix(rows).det())


# --- content / primitive part ---------------------------------------------

@pytest.mark.parametrize(
    "coeffs, content, prim",
    [
        ([-4, 0, 6], 2, [-2, 0, 3]),
        ([-1, -1, 1], 1, [-1, -1, 1]),
        ([0, -3], 3, [0, 1]),
    ],
)
def test_content_primitive_examples(coeffs, content, prim):
    c, g = content_primitive(IntPolynomial(coeffs))
    assert c == content
    assert g == IntPolynomial(prim)


def test_content_primitive_zero():
    c, g = content_primitive(IntPolynomial([]))
    assert c == 0 and g.is_zero()


@given(st.lists(small_ints, min_size=1, max_size=8))
def test_content_primitive_idempotent(coeffs):
    f = IntPolynomial(coeffs)
    if f.is_zero():
        return
    c, g = content_primitive(f)
    assert g * c in (f, -f)
    assert g.leading > 0
    assert content_primitive(g) == (1, g)


@given(forms(1, 5))
def test_form_primitive_sign(F):
    if F.is_zero():
        return
    c, G = content_primitive(F)
    assert next(x for x in G.coeffs if x) > 0
    assert G * c in (F, -F)


# --- forms and polynomials ------------------------------------------------

@given(st.lists(small_ints, min_size=1, max_size=8), st.integers(0, 3))
def test_homogenize_roundtrip(coeffs, extra):
    f = IntPolynomial(coeffs)
    if f.is_zero():
        return
    F = f.homogenize(f.degree + extra)
    assert F.dehomogenize() == f
    assert F.infinity_multiplicity() == extra


@given(st.lists(small_ints, max_size=30), st.lists(small_ints, max_size=30))
def test_poly_mul_matches_numpy(a, b):
    got = IntPolynomial(poly_mul(a, b))
    want = IntPolynomial(
        [int(v) for v in np.polynomial.polynomial.polymul(a or [0], b or [0])]
    ) if a and b else IntPolynomial([])
    assert got == want


def test_kronecker_path_exact():
    rng = random.Random(3)
    a = [rng.randint(-10 ** 30, 10 ** 30) for _ in range(80)]
    b = [rng.randint(-10 ** 30, 10 ** 30) for _ in range(70)]
    naive = [0] * (len(a) + len(b) - 1)
    for i, x in enumerate(a):
        for j, y in enumerate(b):
            naive[i + j] += x * y
    assert poly_mul(a, b) == naive


def test_form_evaluation():
    F = IntBinaryForm(2, (1, -1, -1))  # x0^2 - x0 x1 - x1^2
    assert F(2, 1) == 1
    assert F(1, 0) == 1
    assert F.dehomogenize()(Fraction(3, 2)) == Fraction(-1, 4)


def test_form_degree_mismatch_rejected():
    with pytest.raises(ValueError):
        IntBinaryForm(2, (1, 2))


# --- resultants -----------------------------------------------------------

@pytest.mark.parametrize(
    "F, G, want",
    [
        (IntBinaryForm(2, (1, 0, 0)), IntBinaryForm(2, (0, 0, 1)), 1),
        (IntBinaryForm(2, (1, 0, 5)), IntBinaryForm(2, (0, 0, 1)), 1),
        (IntBinaryForm(2, (1, 0, -7)), IntBinaryForm(2, (0, 0, 1)), 1),
        (IntBinaryForm(2, (0, 1, 0)), IntBinaryForm(2, (0, 1, 0)), 0),
    ],
)
def test_resultant_examples(F, G, want):
    assert resultant_binary(F, G) == want
    assert sympy_resultant(F, G) == want


@settings(max_examples=60, deadline=None)
@given(forms(0, 4), forms(0, 4))
def test_resultant_matches_sympy(F, G):
    want = sympy_resultant(F, G)
    assert resultant_sylvester(F, G) == want
    assert resultant_binary(F, G, method="euclid") == want


@settings(max_examples=40, deadline=None)
@given(forms(1, 3), forms(1, 3), forms(1, 3))
def test_resultant_multiplicative(F, G, H):
    assert resultant_binary(F, G * H) == resultant_binary(F, G) * resultant_binary(F, H)


def test_resultant_large_degree_paths_agree():
    rng = random.Random(11)
    F = IntBinaryForm(9, tuple(rng.randint(-5, 5) for _ in range(10)))
    G = IntBinaryForm(8, tuple(rng.randint(-5, 5) for _ in range(9)))
    assert resultant_binary(F, G, method="euclid") == resultant_sylvester(F, G)


# --- parametric resultants ------------------------------------------------

SQ_A = IntBinaryForm(2, (1, 0, 0))
SQ_B = IntBinaryForm(2, (0, 0, 1))


def test_pushforward_zero_infinity():
    out = resultant_with_parameters(IntBinaryForm(2, (0, 1, 0)), SQ_A, SQ_B)
    assert out == IntBinaryForm(2, (0, 1, 0))


def test_pushforward_plus_minus_one():
    out = resultant_with_parameters(IntBinaryForm(2, (1, 0, -1)), SQ_A, SQ_B)
    assert out == IntBinaryForm(2, (1, -2, 1))


def test_pushforward_golden_pair_symmetric_functions():
    # roots phi, 1 - phi of x^2 - x - 1 map to phi^2, (1-phi)^2.
    # e1 = (phi + psi)^2 - 2 phi psi = 1 + 2 = 3, e2 = (phi psi)^2 = 1, so x^2 - 3x + 1.
    out = resultant_with_parameters(IntBinaryForm(2, (1, -1, -1)), SQ_A, SQ_B)
    assert out == IntBinaryForm(2, (1, -3, 1))


def test_pushforward_degenerate():
    # F = x0 has the root (0:1), where both A = x0 x1 and B = x0^2 vanish
    F = IntBinaryForm(1, (1, 0))
    with pytest.raises(DegenerateResultantError):
        resultant_with_parameters(F, IntBinaryForm(2, (0, 1, 0)), IntBinaryForm(2, (1, 0, 0)))


@settings(max_examples=25, deadline=None)
@given(
    st.lists(st.integers(-4, 4), min_size=2, max_size=6),
    st.lists(st.integers(-3, 3), min_size=3, max_size=3),
    st.lists(st.integers(-3, 3), min_size=3, max_size=3),
)
def test_pushforward_matches_pointwise_roots(fc, ac, bc):
    F = IntBinaryForm(len(fc) - 1, tuple(fc))
    A = IntBinaryForm(2, tuple(ac))
    B = IntBinaryForm(2, tuple(bc))
    f = F.dehomogenize()
    if f.degree < 1 or F.infinity_multiplicity() or resultant_binary(A, B) == 0:
        return
    x = sympy.Symbol("x")
    sqf = sympy.Poly(list(reversed(f.coeffs)), x)
    if sympy.degree(sympy.gcd(sqf, sqf.diff(x))) > 0:
        return
    try:
        out = resultant_with_parameters(F, A, B)
    except DegenerateResultantError:
        return
    assert out.degree == F.degree
    roots = np.roots(list(f.coeffs)[::-1])
    images = []
    for r in roots:
        a = A(complex(r), 1.0)
        b = B(complex(r), 1.0)
        images.append((a, b))
    # each image must be a projective root of the output form
    scale = max(abs(c) for c in out.coeffs)
    for a, b in images:
        n = max(abs(a), abs(b))
        val = out(a / n, b / n)
        assert abs(val) <= 1e-6 * scale * (out.degree + 1) ** 2

import math
from fractions import Fraction

import pytest
import sympy
from hypothesis import given, settings
from hypothesis import strategies as st

from azpair import dynmap
from azpair.bigpoly import IntBinaryForm, resultant_sylvester
from azpair.dynmap import (
    DegreeCapExceeded,
    MapConstructionError,
    MobiusQ,
    bad_reduction_primes,
    compose_lifts,
    conjugate,
    iterate_lift,
    iterate_map,
    make_map,
)

fractions_st = st.fractions(min_value=-20, max_value=20, max_denominator=12)


def test_squaring_lift():
    s = dynmap.squaring()
    assert s.degree == 2
    assert s.lift == (IntBinaryForm(2, (1, 0, 0)), IntBinaryForm(2, (0, 0, 1)))
    assert s.res == 1
    assert s.is_squaring()


def test_quad_zero_is_squaring():
    assert dynmap.quad(0).lift == dynmap.squaring().lift


def test_coc_zero_is_minus_square():
    m = dynmap.coc(0)
    for x in (Fraction(1, 3), Fraction(-2), Fraction(5, 7)):
        assert m(x) == -x * x


def test_lattes_one_one_lift():
    m = dynmap.lattes(1, 1)
    assert m.degree == 4
    # (x0^2 + x1^2)^2 and 4 x0 x1 (x0 - x1)(x0 + x1)
    assert m.phi0.coeffs == (1, 0, 2, 0, 1)
    assert m.phi1.coeffs == (0, 4, 0, -4, 0)


@pytest.mark.parametrize("a, b", [(0, 1), (1, 0), (-1, 2)])
def test_lattes_rejects_bad_parameters(a, b):
    with pytest.raises(MapConstructionError):
        dynmap.lattes(a, b)


def test_make_map_rejects_degenerate():
    with pytest.raises(MapConstructionError):
        make_map([0, 1], [0, 1])  # x/x
    with pytest.raises(MapConstructionError):
        make_map([0, 1], [1])  # degree 1


def test_make_map_clears_rationals():
    m = make_map([Fraction(1, 2), 0, Fraction(1, 3)], [1])
    assert m(Fraction(3)) == Fraction(1, 2) + 3
    assert math.gcd(*m.phi0.coeffs, *m.phi1.coeffs) == 1


def test_conjugate_squaring_by_one_minus_x():
    m = conjugate(dynmap.squaring(), MobiusQ(-1, 1, 0, 1))
    assert m.lift == dynmap.coc(1).lift
    for x in (Fraction(0), Fraction(3), Fraction(-5, 2)):
        assert m(x) == 2 * x - x * x


def test_conjugate_by_identity():
    m = dynmap.lattes(2, 3)
    assert conjugate(m, MobiusQ.identity()).lift == m.lift


def test_conjugate_alpha_three():
    m = conjugate(dynmap.squaring(), MobiusQ(-1, 3, 0, 1))
    for x in range(-4, 5):
        assert m(x) == -x * x + 6 * x - 6


@settings(max_examples=30, deadline=None)
@given(st.integers(-5, 5), st.integers(-5, 5), st.integers(-5, 5), st.integers(-5, 5))
def test_conjugate_roundtrip(a, b, c, d):
    if a * d - b * c == 0:
        return
    g = MobiusQ(a, b, c, d)
    m = dynmap.quad(-1)
    back = conjugate(conjugate(m, g), g.inverse())
    assert back.lift == m.lift


@settings(max_examples=50, deadline=None)
@given(fractions_st)
def test_evaluation_matches_rational_arithmetic(x):
    num = [Fraction(1, 2), -3, 0, 2]
    den = [1, 0, 5]
    m = make_map(num, den)
    dval = sum(c * x ** i for i, c in enumerate(den))
    if dval == 0:
        return
    nval = sum(c * x ** i for i, c in enumerate(num))
    assert m(x) == nval / dval


@pytest.mark.parametrize("fmap", [dynmap.squaring(), dynmap.quad(-1), dynmap.lattes(1, 2), dynmap.coc(3)])
def test_iterate_degree_and_composition(fmap):
    d = fmap.degree
    (q0, q1), _ = iterate_lift(fmap, 3)
    assert q0.degree == d ** 3
    a = iterate_map(fmap, 3)
    b = iterate_map(iterate_map(fmap, 1), 2)
    two_one = compose_lifts(iterate_map(fmap, 2).lift, fmap.lift)
    assert a.lift == map_lift_primitive(two_one)
    assert iterate_map(fmap, 1).lift == fmap.lift
    for x in (Fraction(1, 3), Fraction(2)):
        y = x
        for _ in range(3):
            y = fmap(y) if y is not None else fmap(None)
        assert a(x) == y
    assert b.degree == d ** 2


def map_lift_primitive(lift):
    return dynmap.map_from_lift(*lift).lift


def test_degree_cap():
    with pytest.raises(DegreeCapExceeded):
        iterate_lift(dynmap.squaring(), 12, degree_cap=1000)


def test_degree_cap_env(monkeypatch):
    monkeypatch.setenv("AZPAIR_DEGREE_CAP", "123")
    assert dynmap.default_degree_cap() == 123


@pytest.mark.parametrize("c", [-7, -1, 0, 1, 2, 5, 12])
def test_quad_good_reduction(c):
    m = dynmap.quad(c)
    assert resultant_sylvester(*m.lift) in (1, -1)
    assert bad_reduction_primes(m).primes == frozenset()


def test_squaring_good_reduction():
    assert bad_reduction_primes(dynmap.squaring()).primes == frozenset()


@pytest.mark.parametrize("a, b", [(1, 1), (1, 2), (2, 3)])
def test_lattes_bad_primes_divide_res(a, b):
    m = dynmap.lattes(a, b)
    bp = bad_reduction_primes(m)
    assert bp.complete
    assert m.res == resultant_sylvester(*m.lift)
    assert bp.primes == frozenset(sympy.factorint(abs(m.res)))
    for p in bp.primes:
        assert m.res % p == 0
    assert 2 in bp.primes


@pytest.mark.parametrize("alpha", [1, 2, 5, -3])
def test_coc_bad_primes(alpha):
    m = dynmap.coc(alpha)
    for p in bad_reduction_primes(m).primes:
        assert m.res % p == 0

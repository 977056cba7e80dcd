import math
import random

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from azpair.bigpoly import IntPolynomial
from azpair.mahler import (
    CoefficientEvaluator,
    RootFindingError,
    aberth_roots,
    complex_roots,
    log_mahler,
)

LEHMER = IntPolynomial([1, 1, 0, -1, -1, -1, -1, -1, 0, 1, 1])


def mp_log_mahler(f: IntPolynomial, dps: int = 40) -> float:
    """Independent oracle: mpmath polyroots at high precision."""
    with mpmath.workdps(dps):
        k = next(i for i, c in enumerate(f.coeffs) if c)
        coeffs = list(reversed(f.coeffs[k:]))
        roots = mpmath.polyroots(coeffs, maxsteps=400, extraprec=4 * dps) if len(coeffs) > 1 else []
        val = mpmath.log(abs(f.leading)) + sum(mpmath.log(max(1, abs(r))) for r in roots)
        return float(val)


def cyclotomic(n: int) -> IntPolynomial:
    import sympy

    x = sympy.Symbol("x")
    return IntPolynomial([int(c) for c in reversed(sympy.Poly(sympy.cyclotomic_poly(n, x), x).all_coeffs())])


polys = st.lists(st.integers(-9, 9), min_size=2, max_size=9).map(IntPolynomial).filter(lambda f: f.degree >= 1)


# --- roots ----------------------------------------------------------------

def test_golden_roots():
    rs = complex_roots(IntPolynomial([-1, -1, 1]), 1e-12)
    got = sorted(rs.roots.real)
    assert got[0] == pytest.approx((1 - math.sqrt(5)) / 2, abs=1e-12)
    assert got[1] == pytest.approx((1 + math.sqrt(5)) / 2, abs=1e-12)
    assert np.all(rs.radii > 0) and np.all(rs.radii <= 1e-12)


def test_multiple_root_at_zero():
    rs = complex_roots(IntPolynomial([0, 0, -2, 0, 1]), 1e-10)
    mods = sorted(abs(rs.roots))
    assert mods[:2] == pytest.approx([0, 0], abs=1e-10)
    assert sorted(rs.roots.real)[0] == pytest.approx(-math.sqrt(2), abs=1e-10)
    assert sorted(rs.roots.real)[-1] == pytest.approx(math.sqrt(2), abs=1e-10)


def test_cube_roots_of_unity():
    rs = complex_roots(IntPolynomial([-1, 0, 0, 1]), 1e-12)
    assert len(rs.roots) == 3
    assert np.allclose(abs(rs.roots), 1.0, atol=1e-12)
    assert np.allclose(rs.roots ** 3, 1.0, atol=1e-11)


@settings(max_examples=40, deadline=None)
@given(polys)
def test_root_count_and_vieta(f):
    rs = complex_roots(f, 1e-10)
    assert len(rs.roots) == f.degree
    assert np.all(np.isfinite(rs.radii)) and np.all(rs.radii > 0)
    # product of roots times (-1)^deg times the leading coefficient is the constant term
    prod = complex(np.prod(rs.roots)) * (-1) ** f.degree * f.leading
    bound = abs(f.leading) * np.prod(abs(rs.roots) + rs.radii) - abs(f.leading) * np.prod(np.maximum(abs(rs.roots) - rs.radii, 0))
    assert abs(prod - f.coeffs[0]) <= bound + 1e-9 * (1 + abs(f.coeffs[0]))


def test_matches_mpmath_on_random_high_degree():
    rng = random.Random(5)
    f = IntPolynomial([rng.randint(-20, 20) for _ in range(60)] + [1])
    got = log_mahler(f, 1e-10)
    assert abs(got.value - mp_log_mahler(f, 30)) <= got.error_bound + 1e-9


def test_precision_escalation_near_multiple_roots():
    # (x - 1)^3 (x^2 - 2) (x + 3): clustered roots need more than doubles
    f = IntPolynomial.from_roots([1, 1, 1, -3]) * IntPolynomial([-2, 0, 1])
    mv = log_mahler(f, 1e-10)
    assert mv.value == pytest.approx(math.log(3) + math.log(2), abs=max(mv.error_bound, 1e-9))


def test_nonconvergence_reports_best():
    f = IntPolynomial([random.Random(1).randint(-5, 5) for _ in range(60)] + [1])
    with pytest.raises(RootFindingError) as info:
        aberth_roots(CoefficientEvaluator(f), 1e-14, max_iterations=2)
    assert len(info.value.roots) == f.degree


# --- Mahler measure -------------------------------------------------------

def test_linear():
    assert abs(log_mahler(IntPolynomial([-2, 1])).value - math.log(2)) <= 1e-12


def test_golden():
    assert log_mahler(IntPolynomial([-1, -1, 1])).value == pytest.approx(math.log((1 + math.sqrt(5)) / 2), abs=1e-12)


def test_lehmer():
    mv = log_mahler(LEHMER, 1e-12)
    oracle = mp_log_mahler(LEHMER, 50)
    assert abs(mv.value - oracle) <= 1e-10
    assert abs(mv.value - 0.1623576) <= 1e-7


@pytest.mark.parametrize("ns", [(1,), (2, 3), (5, 7, 12), (1, 1, 2, 4, 8, 9, 15, 30), tuple(range(1, 15))])
def test_cyclotomic_products_vanish(ns):
    f = IntPolynomial([0, 1])  # a factor x as well
    for n in ns:
        f = f * cyclotomic(n)
    mv = log_mahler(f * -1, 1e-10)
    assert abs(mv.value) <= max(mv.error_bound, 1e-10)


def test_content_contributes():
    assert log_mahler(IntPolynomial([-6, 3])).value == pytest.approx(math.log(3) + math.log(2), abs=1e-12)


@settings(max_examples=50, deadline=None)
@given(polys, polys)
def test_multiplicative(f, g):
    a, b, ab = log_mahler(f), log_mahler(g), log_mahler(f * g)
    assert abs(ab.value - a.value - b.value) <= a.error_bound + b.error_bound + ab.error_bound + 1e-9


@settings(max_examples=40, deadline=None)
@given(polys)
def test_reflection_invariant(f):
    a, b = log_mahler(f), log_mahler(f.reflect())
    assert abs(a.value - b.value) <= a.error_bound + b.error_bound + 1e-9


@settings(max_examples=30, deadline=None)
@given(polys)
def test_against_oracle_and_kronecker_bound(f):
    mv = log_mahler(f)
    assert mv.value >= -mv.error_bound
    assert abs(mv.value - mp_log_mahler(f)) <= mv.error_bound + 1e-9


def test_deterministic():
    f = IntPolynomial([3, -1, 4, 1, -5, 9, 2, -6, 5, 3])
    a = complex_roots(f, 1e-10)
    b = complex_roots(f, 1e-10)
    assert np.array_equal(a.roots, b.roots) and np.array_equal(a.radii, b.radii)


def test_zero_rejected():
    with pytest.raises(ValueError):
        log_mahler(IntPolynomial([]))

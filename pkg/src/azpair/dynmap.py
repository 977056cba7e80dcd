"""Rational self-maps of the projective line over the rationals.

A :class:`RationalMap` is stored as its jointly primitive integer lift
``(Phi0, Phi1)``, sign-normalized so that the first nonzero coefficient of
``Phi0`` (then ``Phi1``) is positive.  This fixes the scalar ambiguity of a lift
once and for all; heights and pairings do not depend on the choice.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Optional, Sequence

from .bigpoly import IntBinaryForm, IntPolynomial, resultant_binary

__all__ = [
    "RationalMap",
    "MobiusQ",
    "BadPrimes",
    "MapConstructionError",
    "DegreeCapExceeded",
    "default_degree_cap",
    "make_map",
    "map_from_lift",
    "iterate_lift",
    "compose_lifts",
    "conjugate",
    "squaring",
    "coc",
    "quad",
    "lattes",
    "monomial",
    "bad_reduction_primes",
]

DEGREE_CAP_ENV = "AZPAIR_DEGREE_CAP"
_DEFAULT_DEGREE_CAP = 5000


class MapConstructionError(ValueError):
    pass


class DegreeCapExceeded(RuntimeError):
    pass


def default_degree_cap() -> int:
    """Degree cap from ``AZPAIR_DEGREE_CAP`` if set, else 5000."""
    raw = os.environ.get(DEGREE_CAP_ENV)
    if raw:
        try:
            return int(raw)
        except ValueError:
            raise MapConstructionError(f"{DEGREE_CAP_ENV} must be an integer, got {raw!r}") from None
    return _DEFAULT_DEGREE_CAP


def _joint_normalize(phi0: IntBinaryForm, phi1: IntBinaryForm) -> tuple[IntBinaryForm, IntBinaryForm, int]:
    coeffs = phi0.coeffs + phi1.coeffs
    g = math.gcd(*coeffs)
    if g == 0:
        raise MapConstructionError("zero lift")
    lead = next(c for c in coeffs if c)
    s = g if lead > 0 else -g
    return (
        IntBinaryForm(phi0.degree, tuple(c // s for c in phi0.coeffs)),
        IntBinaryForm(phi1.degree, tuple(c // s for c in phi1.coeffs)),
        g,
    )


@dataclass(frozen=True)
class RationalMap:
    """Degree ``d >= 2`` map ``(x0:x1) -> (Phi0(x0,x1) : Phi1(x0,x1))``."""

    phi0: IntBinaryForm
    phi1: IntBinaryForm
    res: int = field(compare=False)

    @property
    def degree(self) -> int:
        return self.phi0.degree

    @property
    def lift(self) -> tuple[IntBinaryForm, IntBinaryForm]:
        return self.phi0, self.phi1

    def numerator(self) -> IntPolynomial:
        return self.phi0.dehomogenize()

    def denominator(self) -> IntPolynomial:
        return self.phi1.dehomogenize()

    def apply_pair(self, x0, x1):
        """Evaluate the lift on homogeneous coordinates (no normalization)."""
        return self.phi0(x0, x1), self.phi1(x0, x1)

    def __call__(self, x):
        """Evaluate at an affine rational point; ``None`` stands for infinity."""
        if x is None:
            y0, y1 = self.apply_pair(1, 0)
        else:
            x = Fraction(x)
            y0, y1 = self.apply_pair(x.numerator, x.denominator)
        if y1 == 0:
            return None
        return Fraction(y0, y1)

    def is_squaring(self) -> bool:
        d = self.degree
        return (
            d == 2
            and self.phi0.coeffs == (1, 0, 0)
            and self.phi1.coeffs == (0, 0, 1)
        )

    def describe(self) -> str:
        return f"({list(self.numerator().coeffs)})/({list(self.denominator().coeffs)})"

    def __repr__(self) -> str:
        return f"RationalMap(num={list(self.numerator().coeffs)}, den={list(self.denominator().coeffs)})"


def map_from_lift(phi0: IntBinaryForm, phi1: IntBinaryForm) -> RationalMap:
    if phi0.degree != phi1.degree:
        raise MapConstructionError("lift components must have equal degree")
    if phi0.degree < 2:
        raise MapConstructionError("rational maps must have degree at least two")
    p0, p1, _ = _joint_normalize(phi0, phi1)
    res = resultant_binary(p0, p1)
    if res == 0:
        raise MapConstructionError("degenerate lift: numerator and denominator share a root")
    return RationalMap(p0, p1, res)


def _clear_denominators(*lists: Sequence) -> list[list[int]]:
    fracs = [[Fraction(c) for c in lst] for lst in lists]
    lcm = 1
    for lst in fracs:
        for c in lst:
            lcm = lcm * c.denominator // math.gcd(lcm, c.denominator)
    return [[int(c * lcm) for c in lst] for lst in fracs]


def make_map(num, den) -> RationalMap:
    """Map ``x -> num(x)/den(x)`` from ascending coefficient lists (ints or rationals)."""
    num_c = num.coeffs if isinstance(num, IntPolynomial) else num
    den_c = den.coeffs if isinstance(den, IntPolynomial) else den
    num_i, den_i = _clear_denominators(num_c, den_c)
    n, m = IntPolynomial(num_i), IntPolynomial(den_i)
    if n.is_zero() and m.is_zero():
        raise MapConstructionError("numerator and denominator are both zero")
    if m.is_zero():
        raise MapConstructionError("denominator is zero")
    d = max(n.degree, m.degree)
    if d < 2:
        raise MapConstructionError("rational maps must have degree at least two")
    return map_from_lift(n.homogenize(d), m.homogenize(d))


# ---------------------------------------------------------------------------
# composition
# ---------------------------------------------------------------------------

def compose_lifts(
    outer: tuple[IntBinaryForm, IntBinaryForm],
    inner: tuple[IntBinaryForm, IntBinaryForm],
) -> tuple[IntBinaryForm, IntBinaryForm]:
    """``outer(inner0, inner1)`` with no normalization."""
    d = outer[0].degree
    i0, i1 = inner
    p0 = [IntBinaryForm(0, (1,))]
    p1 = [IntBinaryForm(0, (1,))]
    for _ in range(d):
        p0.append(p0[-1] * i0)
        p1.append(p1[-1] * i1)
    out = []
    for form in outer:
        acc = None
        for i, c in enumerate(form.coeffs):
            if c == 0:
                continue
            term = (p0[d - i] * p1[i]) * c
            acc = term if acc is None else acc + term
        if acc is None:
            acc = IntBinaryForm(d * i0.degree, (0,) * (d * i0.degree + 1))
        out.append(acc)
    return out[0], out[1]


@lru_cache(maxsize=128)
def _iterate_cached(fmap: RationalMap, n: int) -> tuple[IntBinaryForm, IntBinaryForm, int]:
    if n == 1:
        return fmap.phi0, fmap.phi1, 1
    prev0, prev1, k_prev = _iterate_cached(fmap, n - 1)
    q0, q1 = compose_lifts(fmap.lift, (prev0, prev1))
    g = math.gcd(*(q0.coeffs + q1.coeffs))
    if g > 1:
        q0 = IntBinaryForm(q0.degree, tuple(c // g for c in q0.coeffs))
        q1 = IntBinaryForm(q1.degree, tuple(c // g for c in q1.coeffs))
    return q0, q1, k_prev ** fmap.degree * g


def iterate_lift(fmap: RationalMap, n: int, degree_cap: Optional[int] = None) -> tuple[tuple[IntBinaryForm, IntBinaryForm], int]:
    """Primitive lift of the ``n``-th iterate, plus the content removed.

    The returned integer ``K`` satisfies ``Phi o ... o Phi = K * (primitive lift)``
    where the left side is the plain ``n``-fold composition of the primitive lift.
    Content is stripped after every composition step.
    """
    if n < 1:
        raise ValueError("n must be positive")
    cap = default_degree_cap() if degree_cap is None else degree_cap
    if fmap.degree ** n > cap:
        raise DegreeCapExceeded(f"degree {fmap.degree}^{n} exceeds cap {cap}")
    q0, q1, k = _iterate_cached(fmap, n)
    return (q0, q1), k


def iterate_map(fmap: RationalMap, n: int, degree_cap: Optional[int] = None) -> RationalMap:
    (q0, q1), _ = iterate_lift(fmap, n, degree_cap)
    return RationalMap(q0, q1, resultant_binary(q0, q1))


# ---------------------------------------------------------------------------
# Mobius maps and conjugation
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class MobiusQ:
    """``x -> (a x + b) / (c x + d)`` with integer entries."""

    a: int
    b: int
    c: int
    d: int

    def __post_init__(self):
        if self.a * self.d - self.b * self.c == 0:
            raise MapConstructionError("Mobius matrix must be invertible")

    @property
    def det(self) -> int:
        return self.a * self.d - self.b * self.c

    def inverse(self) -> "MobiusQ":
        """Adjugate matrix; equal to the inverse up to a scalar."""
        return MobiusQ(self.d, -self.b, -self.c, self.a)

    def lift(self) -> tuple[IntBinaryForm, IntBinaryForm]:
        return IntBinaryForm(1, (self.a, self.b)), IntBinaryForm(1, (self.c, self.d))

    def __call__(self, x):
        if x is None:
            return None if self.c == 0 else Fraction(self.a, self.c)
        x = Fraction(x)
        den = self.c * x + self.d
        if den == 0:
            return None
        return (self.a * x + self.b) / den

    @classmethod
    def identity(cls) -> "MobiusQ":
        return cls(1, 0, 0, 1)


def conjugate(fmap: RationalMap, gamma: MobiusQ) -> RationalMap:
    """``gamma^{-1} o fmap o gamma``."""
    inner = compose_lifts(fmap.lift, gamma.lift())
    g_inv = gamma.inverse()
    a, b, c, d = g_inv.a, g_inv.b, g_inv.c, g_inv.d
    out0 = inner[0] * a + inner[1] * b
    out1 = inner[0] * c + inner[1] * d
    return map_from_lift(out0, out1)


# ---------------------------------------------------------------------------
# families
# ---------------------------------------------------------------------------

def squaring() -> RationalMap:
    """``x -> x^2``."""
    return make_map([0, 0, 1], [1])


def monomial(d: int) -> RationalMap:
    """``x -> x^d`` (``d >= 2``) or ``x -> x^d`` for negative ``d`` (``|d| >= 2``)."""
    if abs(d) < 2:
        raise MapConstructionError("monomial maps need |d| >= 2")
    if d > 0:
        return make_map([0] * d + [1], [1])
    return make_map([1], [0] * (-d) + [1])


def coc(alpha) -> RationalMap:
    """Squaring conjugated by ``x -> alpha - x``: ``x -> alpha - (alpha - x)^2``."""
    a = Fraction(alpha)
    return make_map([a - a * a, 2 * a, -1], [1])


def quad(c) -> RationalMap:
    """``x -> x^2 + c``."""
    return make_map([Fraction(c), 0, 1], [1])


def lattes(a: int, b: int) -> RationalMap:
    """Doubling on the x-line of ``y^2 = x (x - a) (x + b)``: ``(x^2+ab)^2 / (4x(x-a)(x+b))``."""
    if int(a) != a or int(b) != b or a < 1 or b < 1:
        raise MapConstructionError("lattes parameters must be positive integers")
    a, b = int(a), int(b)
    num = IntPolynomial([a * b, 0, 1]) ** 2
    den = IntPolynomial([0, 4]) * IntPolynomial([-a, 1]) * IntPolynomial([b, 1])
    return make_map(num, den)


# ---------------------------------------------------------------------------
# reduction
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class BadPrimes:
    """Primes dividing the resultant of the primitive lift.

    ``complete`` is False when factoring hit the resource cap; ``cofactor`` is
    then the unfactored part of ``|Res|`` (greater than one).
    """

    primes: frozenset
    complete: bool = True
    cofactor: int = 1


def _factor(n: int, trial_limit: int) -> tuple[dict[int, int], int]:
    from sympy import factorint, isprime

    found = factorint(n, limit=trial_limit)
    cofactor = 1
    primes: dict[int, int] = {}
    for p, e in found.items():
        if isprime(p):
            primes[p] = e
        else:
            cofactor *= p ** e
    if cofactor > 1:
        # full attempt (Pollard rho / ECM inside sympy); only reached for huge cofactors
        rest = factorint(cofactor, limit=trial_limit * 100)
        cofactor = 1
        for p, e in rest.items():
            if isprime(p):
                primes[p] = primes.get(p, 0) + e
            else:
                cofactor *= p ** e
    return primes, cofactor


def prime_valuations(n: int, trial_limit: int = 10 ** 6) -> tuple[dict[int, int], int]:
    """Prime factorization of ``|n|`` as ``({p: e}, unfactored_cofactor)``."""
    n = abs(n)
    if n <= 1:
        return {}, 1
    return _factor(n, trial_limit)


def bad_reduction_primes(fmap: RationalMap, trial_limit: int = 10 ** 6) -> BadPrimes:
    primes, cofactor = prime_valuations(fmap.res, trial_limit)
    return BadPrimes(frozenset(primes), cofactor == 1, cofactor)

"""Standard and canonical heights of rational points on the projective line.

The canonical height is computed from the local decomposition of the one-step
discrepancy ``h(phi(x)) - d h(x)``.  For a coprime integer pair ``U`` the step
``U -> Phi(U) / gcd`` changes ``log max|.|`` by an archimedean term
``log ||Phi(u)|| - d log ||u||`` (which only depends on the direction of ``U``)
minus ``log gcd``, and the gcd is supported on primes dividing ``Res(Phi)``.
So the orbit can be followed with a fixed-point real approximation for the
archimedean part and with residues modulo ``p^M`` for each bad prime, without
ever forming the exponentially large exact iterates.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Optional

from .bigpoly import IntBinaryForm
from .dynmap import RationalMap, prime_valuations

__all__ = [
    "ProjPointQ",
    "HeightValue",
    "HeightBounds",
    "HeightConvergenceError",
    "standard_height",
    "canonical_height",
    "height_bounds",
    "orbit_average_height",
    "DEFAULT_ITERATION_CAP",
]

log = logging.getLogger(__name__)

DEFAULT_ITERATION_CAP = 64
_LN2 = math.log(2.0)


@dataclass(frozen=True)
class ProjPointQ:
    """Coprime, sign-normalized homogeneous coordinates ``(x0 : x1)``.

    The affine coordinate is ``x0/x1``; infinity is ``(1 : 0)``.
    """

    x0: int
    x1: int

    def __post_init__(self):
        x0, x1 = int(self.x0), int(self.x1)
        if x0 == 0 and x1 == 0:
            raise ValueError("(0:0) is not a point")
        g = math.gcd(x0, x1)
        x0, x1 = x0 // g, x1 // g
        if x1 < 0 or (x1 == 0 and x0 < 0):
            x0, x1 = -x0, -x1
        object.__setattr__(self, "x0", x0)
        object.__setattr__(self, "x1", x1)

    @classmethod
    def from_value(cls, x) -> "ProjPointQ":
        """From an int, Fraction, ``"p/q"`` string or ``None``/``"inf"`` for infinity."""
        if x is None:
            return cls(1, 0)
        if isinstance(x, str):
            s = x.strip()
            if s.lower() in ("inf", "infinity", "oo", "1/0"):
                return cls(1, 0)
            if "/" in s:
                p, q = s.split("/", 1)
                return cls(int(p), int(q))
            x = Fraction(s)
        x = Fraction(x)
        return cls(x.numerator, x.denominator)

    @property
    def is_infinity(self) -> bool:
        return self.x1 == 0

    def as_fraction(self) -> Optional[Fraction]:
        return None if self.x1 == 0 else Fraction(self.x0, self.x1)

    def image(self, fmap: RationalMap) -> "ProjPointQ":
        return ProjPointQ(*fmap.apply_pair(self.x0, self.x1))

    def __str__(self) -> str:
        if self.x1 == 0:
            return "inf"
        return str(self.x0) if self.x1 == 1 else f"{self.x0}/{self.x1}"


@dataclass(frozen=True)
class HeightValue:
    value: float
    error_bound: float
    iterations_used: int = 0


class HeightConvergenceError(RuntimeError):
    def __init__(self, message: str, best: HeightValue):
        super().__init__(message)
        self.best = best


def _log_int(n: int) -> float:
    n = abs(n)
    bl = n.bit_length()
    if bl <= 900:
        return math.log(n)
    s = bl - 64
    return math.log(n >> s) + s * _LN2


def _log_ratio(a: int, b: int, d: int) -> float:
    """``log a - d log b`` for positive integers, accurate even for huge inputs."""
    ea = max(a.bit_length() - 64, 0)
    eb = max(b.bit_length() - 64, 0)
    return math.log(a >> ea) - d * math.log(b >> eb) + (ea - d * eb) * _LN2


def standard_height(p: ProjPointQ) -> HeightValue:
    m = max(abs(p.x0), abs(p.x1))
    return HeightValue(_log_int(m), 0.0, 0)


# ---------------------------------------------------------------------------
# one-step discrepancy bounds
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class HeightBounds:
    """Bounds for ``h(phi(x)) - d h(x)`` and data for the local decomposition.

    ``arch_upper`` bounds ``log ||Phi(u)||`` from above and ``arch_lower`` from
    below over ``||u||_inf = 1``.  ``bad`` maps each prime dividing ``Res`` to its
    exponent.
    """

    arch_upper: float
    arch_lower: float
    log_res: float
    bad: dict
    complete: bool

    @property
    def lower(self) -> float:
        return self.arch_lower - self.log_res

    @property
    def upper(self) -> float:
        return self.arch_upper

    @property
    def step_constant(self) -> float:
        """``sup |h(phi(x)) - d h(x)|`` bound."""
        return max(abs(self.lower), abs(self.upper))


def _solve_fraction(mat: list[list[Fraction]], rhs: list[Fraction]) -> list[Fraction]:
    n = len(mat)
    a = [row[:] + [r] for row, r in zip(mat, rhs)]
    for col in range(n):
        piv = next(r for r in range(col, n) if a[r][col] != 0)
        a[col], a[piv] = a[piv], a[col]
        pv = a[col][col]
        for r in range(n):
            if r != col and a[r][col] != 0:
                f = a[r][col] / pv
                a[r] = [x - f * y for x, y in zip(a[r], a[col])]
    return [a[i][n] / a[i][i] for i in range(n)]


def _bezout_l1(phi0: IntBinaryForm, phi1: IntBinaryForm) -> float:
    """``max_i (||A_i0||_1 + ||A_i1||_1)`` for ``A_i0 Phi0 + A_i1 Phi1 = x_i^(2d-1)``."""
    d = phi0.degree
    size = 2 * d
    # unknowns: coefficients of A0 (degree d-1), then A1; equations: coefficients of degree 2d-1
    mat = [[Fraction(0)] * size for _ in range(size)]
    for k in range(d):
        for j, c in enumerate(phi0.coeffs):
            mat[k + j][k] += c
        for j, c in enumerate(phi1.coeffs):
            mat[k + j][d + k] += c
    worst = 0.0
    for target in (0, size - 1):
        rhs = [Fraction(0)] * size
        rhs[target] = Fraction(1)
        sol = _solve_fraction(mat, rhs)
        worst = max(worst, float(sum(abs(x) for x in sol)))
    return worst


@lru_cache(maxsize=256)
def height_bounds(fmap: RationalMap) -> HeightBounds:
    upper = max(sum(abs(c) for c in fmap.phi0.coeffs), sum(abs(c) for c in fmap.phi1.coeffs))
    l1a = _bezout_l1(fmap.phi0, fmap.phi1)
    primes, cofactor = prime_valuations(fmap.res)
    return HeightBounds(
        arch_upper=math.log(upper),
        arch_lower=-math.log(l1a),
        log_res=_log_int(fmap.res),
        bad=dict(primes),
        complete=cofactor == 1,
    )


# ---------------------------------------------------------------------------
# canonical height
# ---------------------------------------------------------------------------

def _arch_terms(fmap: RationalMap, x0: int, x1: int, steps: int, bits: int) -> list[float]:
    d = fmap.degree
    c0, c1 = fmap.phi0.coeffs, fmap.phi1.coeffs
    out = []
    for _ in range(steps):
        p0 = [1]
        p1 = [1]
        for _k in range(d):
            p0.append(p0[-1] * x0)
            p1.append(p1[-1] * x1)
        a = sum(c * p0[d - i] * p1[i] for i, c in enumerate(c0) if c)
        b = sum(c * p0[d - i] * p1[i] for i, c in enumerate(c1) if c)
        out.append(_log_ratio(max(abs(a), abs(b)), max(abs(x0), abs(x1)), d))
        shift = max(max(abs(a), abs(b)).bit_length() - bits, 0)
        x0, x1 = a >> shift, b >> shift
        if x0 == 0 and x1 == 0:  # pragma: no cover - excluded by Res != 0 and the bit budget
            raise ArithmeticError("fixed-point orbit collapsed")
    return out


def _vp(n: int, p: int, cap: int) -> int:
    if n == 0:
        return cap
    v = 0
    while v < cap and n % p == 0:
        n //= p
        v += 1
    return v


def _padic_valuations(fmap: RationalMap, x0: int, x1: int, steps: int, p: int, e: int) -> list[int]:
    """Exponent of ``p`` in the gcd extracted at each step of the exact orbit."""
    prec = steps * e + 1
    mod = p ** prec
    u0, u1 = x0 % mod, x1 % mod
    out = []
    for _ in range(steps):
        a, b = fmap.apply_pair(u0, u1)
        a %= mod
        b %= mod
        g = min(_vp(a, p, prec), _vp(b, p, prec))
        if g > e:  # pragma: no cover - impossible for a p-primitive input
            raise ArithmeticError("gcd exponent exceeds the resultant valuation")
        out.append(g)
        prec -= g
        mod = p ** prec
        pg = p ** g
        u0, u1 = (a // pg) % mod, (b // pg) % mod
    return out


def canonical_height(
    fmap: RationalMap,
    p: ProjPointQ,
    tol: float = 1e-10,
    iteration_cap: int = DEFAULT_ITERATION_CAP,
) -> HeightValue:
    """Canonical height ``lim h(phi^n(p)) / d^n`` with a certified error bound ``<= tol``."""
    if not tol > 0:
        raise ValueError("tol must be positive")
    hb = height_bounds(fmap)
    if not hb.complete:
        raise HeightConvergenceError(
            "resultant could not be fully factored; non-archimedean terms unavailable",
            HeightValue(standard_height(p).value, math.inf, 0),
        )
    d = fmap.degree
    C = hb.step_constant
    # leave half of tol for the tail and a sliver for rounding
    target = tol / 2
    if C == 0:
        steps = 0
    else:
        steps = max(1, math.ceil(math.log(C / ((d - 1) * target)) / math.log(d)))
    capped = steps > iteration_cap
    steps = min(steps, iteration_cap)
    lip_bits = math.ceil(math.log2(d) + (hb.arch_upper - hb.arch_lower) / _LN2) + 4
    bits = 64 + steps * lip_bits
    h0 = standard_height(p).value
    arch = _arch_terms(fmap, p.x0, p.x1, steps, bits)
    local = [0.0] * steps
    for q, e in hb.bad.items():
        lq = math.log(q)
        for j, g in enumerate(_padic_valuations(fmap, p.x0, p.x1, steps, q, e)):
            local[j] += g * lq
    terms = [h0] + [(a - b) / d ** (j + 1) for j, (a, b) in enumerate(zip(arch, local))]
    value = math.fsum(terms)
    tail = C / (d ** steps * (d - 1)) if C else 0.0
    rounding = 8 * 2.0 ** -53 * (abs(h0) + sum(abs(t) for t in terms[1:]) + steps) + steps * 2.0 ** (-bits + lip_bits + 8)
    err = tail + rounding
    value = max(value, 0.0)
    hv = HeightValue(value, err, steps)
    if capped or err > tol:
        raise HeightConvergenceError(
            f"tolerance {tol:g} not reached within {iteration_cap} iterations (bound {err:.3g})", hv
        )
    return hv


def orbit_average_height(F: IntBinaryForm, target_radius: float = 1e-10):
    """Average standard height over the projective roots of a primitive form: ``m(F)/deg F``."""
    from .mahler import log_mahler

    if F.is_zero() or F.degree < 1:
        raise ValueError("need a nonzero form of positive degree")
    f = F.dehomogenize()
    mv = log_mahler(f, target_radius) if f.degree >= 1 else None
    if mv is None:
        val = _log_int(f.leading)
    else:
        val = mv.value
    return max(val, 0.0) / F.degree

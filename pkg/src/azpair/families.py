"""Closed forms and quadratures for the pairing of the squaring map with three families.

* ``coc``: conjugates ``alpha - (alpha - x)^2`` of the squaring map, exact via
  the circle integral ``I(t)``.
* ``quad``: ``x^2 + c``, bracketed by explicit bounds.
* ``lattes``: the doubling map on ``y^2 = x(x - a)(x + b)``, whose invariant
  density is proportional to ``1/|P(x)|``; evaluated by two independent
  quadratures of that density.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

import numpy as np
from scipy import integrate

__all__ = [
    "QuadratureResult",
    "LattesArchData",
    "QuadratureError",
    "I_of_t",
    "smyth_constant",
    "L2chi",
    "coc_pairing_exact",
    "quad_pairing_bounds",
    "F_alpha_beta",
    "lattes_pairing_quadrature",
]

SQRT3 = math.sqrt(3.0)
SMYTH_FACTOR = 3 * SQRT3 / (4 * math.pi)


class QuadratureError(RuntimeError):
    pass


@dataclass(frozen=True)
class QuadratureResult:
    value: float
    error_estimate: float
    evaluations: int = 0


class _Counter:
    def __init__(self, f):
        self.f = f
        self.calls = 0

    def __call__(self, x):
        self.calls += 1
        return self.f(x)


def _quad(f, a, b, tol, points=None, limit=400) -> tuple[float, float, int]:
    g = _Counter(f)
    kw = {"epsabs": tol, "epsrel": 0.0, "limit": limit, "full_output": 1}
    if points is not None and math.isfinite(a) and math.isfinite(b):
        pts = sorted(p for p in set(points) if a < p < b)
        if pts:
            kw["points"] = pts
    out = integrate.quad(g, a, b, **kw)
    val, err = out[0], out[1]
    return val, err, g.calls


def _hst(x) -> float:
    x = Fraction(x)
    return math.log(max(abs(x.numerator), abs(x.denominator)))


# ---------------------------------------------------------------------------
# coc family
# ---------------------------------------------------------------------------

def I_of_t(t: float, tol: float = 1e-10) -> QuadratureResult:
    """``int_0^1 log+|t + e^(2 pi i theta)| dtheta - log+ t``; exactly 0 for ``t = 0`` and ``t >= 2``."""
    t = float(t)
    if t < 0 or not math.isfinite(t):
        raise ValueError("t must be a finite nonnegative number")
    if t == 0.0 or t >= 2.0:
        return QuadratureResult(0.0, 0.0, 0)
    # |t + e^{2 pi i theta}| >= 1 exactly for theta in [-theta*, theta*]
    theta_star = math.acos(-t / 2) / (2 * math.pi)

    def integrand(th):
        return 0.5 * math.log1p(t * t + 2 * t * math.cos(2 * math.pi * th))

    val, err, calls = _quad(integrand, 0.0, theta_star, tol / 4)
    if err > tol:
        raise QuadratureError(f"I({t}) did not reach tolerance {tol:g} (estimate {err:.3g})")
    value = 2 * val - math.log(max(t, 1.0))
    return QuadratureResult(value, 2 * err, calls)


def L2chi(tol: float = 1e-12) -> tuple[float, float]:
    """``L(2, chi)`` for the nontrivial character mod 3, with a rigorous error bound.

    Blocks ``1/(3k+1)^2 - 1/(3k+2)^2 = int_{3k+1}^{3k+2} 2 x^-3 dx`` are positive
    and decreasing, so the tail after ``K`` blocks lies between
    ``1/(3 (3K+1)^2)`` and ``1/(3 (3K-1)^2)``; the midpoint is reported.
    """
    K = 1
    while True:
        lo = 1.0 / (3 * (3 * K + 1) ** 2)
        hi = 1.0 / (3 * (3 * K - 1) ** 2)
        if (hi - lo) / 2 <= tol / 2:
            break
        K *= 2
    # refine K downward by bisection for the smallest admissible block count
    lo_k, hi_k = K // 2, K
    while hi_k - lo_k > 1:
        mid = (lo_k + hi_k) // 2
        if (1.0 / (3 * (3 * mid - 1) ** 2) - 1.0 / (3 * (3 * mid + 1) ** 2)) / 2 <= tol / 2:
            hi_k = mid
        else:
            lo_k = mid
    K = max(hi_k, 1)
    k = np.arange(K, dtype=float)
    blocks = 1.0 / (3 * k + 1) ** 2 - 1.0 / (3 * k + 2) ** 2
    lo = 1.0 / (3 * (3 * K + 1) ** 2)
    hi = 1.0 / (3 * (3 * K - 1) ** 2)
    value = math.fsum(blocks.tolist()) + (lo + hi) / 2
    # positive blocks, each within a few ulps; fsum adds no further error beyond one rounding
    return value, (hi - lo) / 2 + 8 * 2.0 ** -53 * value


def smyth_constant(tol: float = 1e-10) -> float:
    """``(3 sqrt 3 / 4 pi) L(2, chi)``, about 0.3230659."""
    if not tol > 0:
        raise ValueError("tol must be positive")
    value, _ = L2chi(tol / SMYTH_FACTOR)
    return SMYTH_FACTOR * value


def coc_pairing_exact(alpha, tol: float = 1e-10) -> QuadratureResult:
    """Pairing of the squaring map with ``coc(alpha)``: ``h_st(alpha) + I(|alpha|)``."""
    a = Fraction(alpha)
    i = I_of_t(abs(float(a)), tol)
    return QuadratureResult(_hst(a) + i.value, i.error_estimate, i.evaluations)


# ---------------------------------------------------------------------------
# quad family
# ---------------------------------------------------------------------------

def quad_pairing_bounds(c) -> tuple[float, float]:
    """``[h_st(c)/2 - log 3, h_st(c)/2 + log 2]``."""
    h = _hst(Fraction(c))
    return h / 2 - math.log(3), h / 2 + math.log(2)


# ---------------------------------------------------------------------------
# Lattes family
# ---------------------------------------------------------------------------

def _F_value(alpha: float, beta: float, tol: float) -> tuple[float, float, int]:
    # |alpha e^{it} - 1|^2 = (alpha - 1)^2 + 4 alpha sin^2(t/2), free of cancellation
    am, bm = (alpha - 1) ** 2, (beta - 1) ** 2

    def integrand(th):
        s2 = math.sin(th / 2) ** 2
        c2 = math.cos(th / 2) ** 2
        return 1.0 / math.sqrt((am + 4 * alpha * s2) * (bm + 4 * beta * c2))

    val, err, calls = _quad(integrand, 0.0, math.pi, tol / 2)
    return 2 * val, 2 * err, calls


def F_alpha_beta(alpha: float, beta: float, tol: float = 1e-10) -> QuadratureResult:
    """``int_0^{2 pi} dtheta / (|alpha e^{i theta} - 1| |beta e^{i theta} + 1|)``."""
    alpha, beta = float(alpha), float(beta)
    if alpha < 0 or beta < 0:
        raise ValueError("alpha and beta must be nonnegative")
    if alpha == 1.0 or beta == 1.0:
        raise ValueError("F diverges when alpha = 1 or beta = 1")
    val, err, calls = _F_value(alpha, beta, tol)
    return QuadratureResult(val, err, calls)


@dataclass
class LattesArchData:
    a: int
    b: int
    C_P: QuadratureResult
    logplus_integral: QuadratureResult
    theta: QuadratureResult
    pairing: QuadratureResult
    identity_residual: float = 0.0
    cartesian_pairing: Optional[float] = None
    notes: dict = field(default_factory=dict)


def _polar_route(a: int, b: int, tol: float):
    ab = a * b
    inner_tol = tol * 1e-2
    calls = [0]

    def F(r):
        # the singularity at r = a, b is logarithmic; clamping costs O(1e-12 log 1e-12)
        for s in (a, b):
            if abs(r - s) < 1e-12 * s:
                r = s * (1 + math.copysign(1e-12, r - s))
        v, _, c = _F_value(r / a, r / b, inner_tol)
        calls[0] += c
        return v

    brk = sorted({float(a), float(b), 1.0, math.sqrt(ab)})

    def integrate_over(fn, lo, hi):
        pts = [lo] + [p for p in brk if lo < p < hi] + [hi]
        total, err = 0.0, 0.0
        for u, v in zip(pts, pts[1:]):
            val, e, _ = _quad(fn, u, v, tol / 8)
            total += val
            err += e
        return total, err

    top = max(brk) * 4
    c_fin, c_err = integrate_over(F, 0.0, top)
    c_tail, c_terr, _ = _quad(F, top, math.inf, tol / 8)
    CP = (c_fin + c_tail) / ab
    CP_err = (c_err + c_terr) / ab

    log_int, l_err = integrate_over(lambda r: F(r) * math.log(r), 1.0, top)
    l_tail, l_terr, _ = _quad(lambda r: F(r) * math.log(r), top, math.inf, tol / 8)
    L = (log_int + l_tail) / ab
    L_err = (l_err + l_terr) / ab

    th_int, th_err = integrate_over(lambda r: F(r) * -math.log(r) if r > 0 else 0.0, 0.0, 1.0)
    theta = th_int / (ab * CP)
    theta_err = th_err / (ab * CP) + theta * CP_err / CP

    # the integral of F(r/a, r/b) log(r / sqrt(ab)) over (0, inf) vanishes
    s = 0.5 * math.log(ab)
    id_fin, _ = integrate_over(lambda r: F(r) * (math.log(r) - s) if r > 0 else 0.0, 0.0, top)
    id_tail, _, _ = _quad(lambda r: F(r) * (math.log(r) - s), top, math.inf, tol / 8)
    identity = (id_fin + id_tail) / ab
    return (CP, CP_err), (L, L_err), (theta, theta_err), identity, calls[0]


def _cartesian_route(a: int, b: int, tol: float):
    """``C_P`` and the ``log+`` integral by direct iterated integration in ``(x, y)``."""
    roots = (-float(b), 0.0, float(a))
    calls = [0]

    def inv_abs_P(x, y):
        calls[0] += 1
        z = complex(x, y)
        return 1.0 / abs(z * (z - a) * (z + b))

    def inner(y, weight):
        pts = list(roots)
        if weight is not None and y < 1:
            w = math.sqrt(1 - y * y)
            pts += [-w, w]
        lo, hi = -float(b) - 2.0, float(a) + 2.0
        pts = sorted(set(p for p in pts if lo < p < hi))
        if weight is None:
            f = lambda x: inv_abs_P(x, y)
        else:
            f = lambda x: inv_abs_P(x, y) * weight(x, y)
        total = 0.0
        edges = [lo] + pts + [hi]
        for u, v in zip(edges, edges[1:]):
            total += _quad(f, u, v, tol * 1e-2)[0]
        total += _quad(f, -math.inf, lo, tol * 1e-2)[0]
        total += _quad(f, hi, math.inf, tol * 1e-2)[0]
        return total

    def outer(weight):
        ybrk = [0.0, 1e-6, 1e-3, 0.1, 1.0, float(max(a, b)), 4.0 * max(a, b)]
        total, err = 0.0, 0.0
        for u, v in zip(ybrk, ybrk[1:]):
            val, e, _ = _quad(lambda y: inner(y, weight), u, v, tol / 8, limit=200)
            total += val
            err += e
        val, e, _ = _quad(lambda y: inner(y, weight), ybrk[-1], math.inf, tol / 8, limit=200)
        return 2 * (total + val), 2 * (err + e)

    logplus = lambda x, y: max(0.0, 0.5 * math.log(x * x + y * y))
    CP, CP_err = outer(None)
    L, L_err = outer(logplus)
    return (CP, CP_err), (L, L_err), calls[0]


def lattes_pairing_quadrature(a: int, b: int, tol: float = 1e-7, second_route: bool = True) -> LattesArchData:
    """Pairing of the squaring map with ``lattes(a, b)`` as ``Theta_{a,b} + log sqrt(ab)``.

    Only the archimedean place contributes.  With ``second_route`` the density
    integrals are recomputed by Cartesian panels and the gap between the two
    routes is folded into the reported error estimates.
    """
    a, b = int(a), int(b)
    if a < 1 or b < 1:
        raise ValueError("a and b must be positive integers")
    (CP, CP_err), (L, L_err), (theta, theta_err), identity, calls = _polar_route(a, b, tol)
    half_log = 0.5 * math.log(a * b)
    pairing = theta + half_log
    pair_err = theta_err
    notes = {"polar_logplus_ratio": L / CP}
    cart = None
    gap = abs(L / CP - pairing)
    if second_route:
        (CP2, CP2_err), (L2, L2_err), calls2 = _cartesian_route(a, b, tol)
        cart = L2 / CP2
        calls += calls2
        notes.update(cartesian_C_P=CP2, cartesian_logplus=L2)
        gap = max(gap, abs(cart - pairing))
        CP_err = max(CP_err, abs(CP2 - CP))
        L_err = max(L_err, abs(L2 - L))
    pair_err = max(pair_err, gap)
    theta_err = max(theta_err, gap)
    return LattesArchData(
        a=a,
        b=b,
        C_P=QuadratureResult(CP, CP_err, calls),
        logplus_integral=QuadratureResult(L, L_err, calls),
        theta=QuadratureResult(theta, theta_err, calls),
        pairing=QuadratureResult(pairing, pair_err, calls),
        identity_residual=identity,
        cartesian_pairing=cart,
        notes=notes,
    )

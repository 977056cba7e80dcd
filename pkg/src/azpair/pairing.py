"""Periodic-point estimates of the Arakelov-Zhang pairing.

The estimate at ``(n, k)`` averages ``h(phi^k(x)) / d_phi^k`` over the
``d_psi^n + 1`` fixed points of ``psi^n`` (with multiplicity).  The fixed points
are the roots of an exact integer binary form; the average is the log Mahler
measure of that form pushed forward by ``phi^k``, divided by its degree and
``d_phi^k``.

Roots of the periodic form are found without expanding its (huge) coefficients
into floating point: the evaluator runs the orbit ``(z, 1) -> Phi(z, 1) -> ...``
directly, with a running error bound.  The pushforward is accounted for pointwise
by following each root's normalized lift under ``Phi``; the integer content of
the exact pushforward (only possible at primes dividing ``Res(Phi)``) is
computed exactly by resultants when such primes exist.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Optional, Sequence

import gmpy2
import numpy as np

from .bigpoly import IntBinaryForm, content_primitive, resultant_with_parameters
from .dynmap import DegreeCapExceeded, RationalMap, default_degree_cap, iterate_lift
from .mahler import (
    RootFindingError,
    RootSet,
    aberth_roots,
    complex_roots,
    centered_initial,
    logplus_uncertainty,
)

__all__ = [
    "PairingEstimate",
    "PeriodicFormEvaluator",
    "periodic_form",
    "pushforward_form",
    "periodic_roots",
    "pairing_estimate",
    "pairing_converged",
    "default_schedule",
    "symmetry_gap",
    "local_pairing_good_reduction",
]

log = logging.getLogger(__name__)

_EPS = np.finfo(float).eps
_LN2 = math.log(2.0)
DEFAULT_TARGET_RADIUS = 1e-8


@dataclass
class PairingEstimate:
    value: float
    n: int
    k: int
    form_degree: int
    error_bound: float
    history: list = field(default_factory=list)
    stable: bool = True

    def as_record(self) -> dict:
        return {
            "value": self.value,
            "error_bound": self.error_bound,
            "n": self.n,
            "k": self.k,
            "form_degree": self.form_degree,
            "stable": self.stable,
            "history": [list(h) for h in self.history],
        }


def _log_int(n: int) -> float:
    n = abs(n)
    bl = n.bit_length()
    if bl <= 900:
        return math.log(n)
    s = bl - 64
    return math.log(n >> s) + s * _LN2


# ---------------------------------------------------------------------------
# exact forms
# ---------------------------------------------------------------------------

@lru_cache(maxsize=64)
def _periodic_form_cached(psi: RationalMap, n: int) -> tuple[IntBinaryForm, int, int]:
    (q0, q1), K = iterate_lift(psi, n, degree_cap=psi.degree ** n)
    # x1*Q0 - x0*Q1
    D = q0.degree
    coeffs = [0] * (D + 2)
    for i, c in enumerate(q0.coeffs):
        coeffs[i + 1] += c
    for i, c in enumerate(q1.coeffs):
        coeffs[i] -= c
    c_per, F = content_primitive(IntBinaryForm(D + 1, tuple(coeffs)))
    return F, K, c_per


def periodic_form(psi: RationalMap, n: int, degree_cap: Optional[int] = None) -> IntBinaryForm:
    """Primitive form of degree ``d^n + 1`` vanishing exactly on the fixed points of ``psi^n``."""
    if n < 1:
        raise ValueError("n must be positive")
    cap = default_degree_cap() if degree_cap is None else degree_cap
    if psi.degree ** n + 1 > cap:
        raise DegreeCapExceeded(f"periodic form degree {psi.degree}^{n}+1 exceeds cap {cap}")
    return _periodic_form_cached(psi, n)[0]


def _pushforward_with_content(F: IntBinaryForm, phi: RationalMap, k: int) -> tuple[IntBinaryForm, float]:
    """Primitive pushforward and the log of the content stripped from the plain resultant chain."""
    G = F
    log_content = 0.0
    for _ in range(k):
        raw = resultant_with_parameters(G, phi.phi0, phi.phi1, primitive=False)
        c, G = content_primitive(raw)
        log_content = phi.degree * log_content + _log_int(c)
    return G, log_content


def pushforward_form(F: IntBinaryForm, phi: RationalMap, k: int) -> IntBinaryForm:
    """Primitive form of degree ``deg F`` whose roots are ``phi^k`` of the roots of ``F``."""
    if k < 0:
        raise ValueError("k must be nonnegative")
    if F.is_zero():
        raise ValueError("F must be nonzero")
    return _pushforward_with_content(content_primitive(F)[1], phi, k)[0]


# ---------------------------------------------------------------------------
# orbit evaluator
# ---------------------------------------------------------------------------

class PeriodicFormEvaluator:
    """Evaluates ``F(z, 1)`` for the periodic form of ``psi^n`` by iterating ``Phi``.

    ``f(z) = (U0 - z U1) / (K c)`` where ``U`` is the plain ``n``-fold composition
    of the lift applied to ``(z, 1)``, ``K`` the content it carries over the
    primitive lift of the iterate and ``c`` the content of ``x1 Q0 - x0 Q1``.
    Iterates are rescaled by powers of two so nothing overflows; a running
    absolute error bound is carried alongside.
    """

    def __init__(self, psi: RationalMap, n: int):
        F, K, c_per = _periodic_form_cached(psi, n)
        self.psi = psi
        self.n = n
        self.form = F
        f = F.dehomogenize()
        self.affine = f
        self.degree = f.degree
        self.log_lc = _log_int(f.leading)
        self.log_const = _log_int(K) + _log_int(c_per)
        self.d = psi.degree
        self.c0 = [int(c) for c in psi.phi0.coeffs]
        self.c1 = [int(c) for c in psi.phi1.coeffs]
        self.f0 = np.array([float(c) for c in self.c0])
        self.f1 = np.array([float(c) for c in self.c1])
        self.a0 = np.abs(self.f0)
        self.a1 = np.abs(self.f1)
        self.gamma = (6 * self.d + 16) * _EPS

    # -- double precision, vectorized ----------------------------------------
    def _form(self, cf, af, a, b, da, db, A, B):
        d = self.d
        val = np.zeros(a.shape, dtype=complex)
        der = np.zeros(a.shape, dtype=complex)
        mag = np.zeros(a.shape)
        pa = np.zeros(a.shape)
        pb = np.zeros(a.shape)
        apow = [np.ones(a.shape, dtype=complex)]
        bpow = [np.ones(a.shape, dtype=complex)]
        Apow = [np.ones(a.shape)]
        Bpow = [np.ones(a.shape)]
        for _ in range(d):
            apow.append(apow[-1] * a)
            bpow.append(bpow[-1] * b)
            Apow.append(Apow[-1] * A)
            Bpow.append(Bpow[-1] * B)
        for i in range(d + 1):
            c = cf[i]
            if c == 0:
                continue
            ea, eb = d - i, i
            val += c * apow[ea] * bpow[eb]
            term = np.zeros(a.shape, dtype=complex)
            if ea:
                term += ea * apow[ea - 1] * bpow[eb] * da
                pa += af[i] * ea * Apow[ea - 1] * Bpow[eb]
            if eb:
                term += eb * apow[ea] * bpow[eb - 1] * db
                pb += af[i] * eb * Apow[ea] * Bpow[eb - 1]
            der += c * term
            mag += af[i] * Apow[ea] * Bpow[eb]
        return val, der, mag, pa, pb

    def eval_double(self, z: np.ndarray):
        z = np.asarray(z, dtype=complex)
        with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
            s0 = np.maximum(np.frexp(np.maximum(np.abs(z), 1.0))[1], 0)
            a = np.ldexp(z.real, -s0) + 1j * np.ldexp(z.imag, -s0)
            b = np.ldexp(np.ones(z.shape), -s0).astype(complex)
            da = b.copy()
            db = np.zeros(z.shape, dtype=complex)
            ea = np.zeros(z.shape)
            eb = np.zeros(z.shape)
            L = s0 * _LN2
            for _ in range(self.n):
                A = np.abs(a) + ea
                B = np.abs(b) + eb
                v0, d0, m0, pa0, pb0 = self._form(self.f0, self.a0, a, b, da, db, A, B)
                v1, d1, m1, pa1, pb1 = self._form(self.f1, self.a1, a, b, da, db, A, B)
                ea, eb = pa0 * ea + pb0 * eb + self.gamma * m0, pa1 * ea + pb1 * eb + self.gamma * m1
                s = np.frexp(np.maximum(np.abs(v0), np.abs(v1)))[1]
                s = np.where(np.isfinite(s), s, 0)
                a, b, da, db = (_ldexp_c(v, -s) for v in (v0, v1, d0, d1))
                ea, eb = np.ldexp(ea, -s), np.ldexp(eb, -s)
                L = self.d * L + s * _LN2
            g = a - z * b
            dg = da - b - z * db
            err = ea + np.abs(z) * eb + 2 * _EPS * (np.abs(a) + np.abs(z) * np.abs(b))
            newton = g / dg
            logf = np.log(np.abs(g)) + L - self.log_const
            logerr = np.log(err) + L - self.log_const
        return newton, logf, logerr

    # -- multiprecision, scalar -------------------------------------------------
    def eval_mp(self, z: Sequence[complex], prec: int):
        d = self.d
        m = len(z)
        newton = np.empty(m, dtype=complex)
        logf = np.empty(m)
        logerr = np.empty(m)
        with gmpy2.context(gmpy2.get_context(), precision=prec):
            unit = gmpy2.mpfr(2) ** (-prec)
            gamma = (6 * d + 16) * unit
            c0 = [gmpy2.mpfr(c) for c in self.c0]
            c1 = [gmpy2.mpfr(c) for c in self.c1]
            for idx, zz in enumerate(z):
                zc = gmpy2.mpc(complex(zz))
                a, b = zc, gmpy2.mpc(1)
                da, db = gmpy2.mpc(1), gmpy2.mpc(0)
                ea = eb = gmpy2.mpfr(0)
                L = gmpy2.mpfr(0)
                for _ in range(self.n):
                    A, B = abs(a) + ea, abs(b) + eb
                    ap = [gmpy2.mpc(1)]
                    bp = [gmpy2.mpc(1)]
                    Ap = [gmpy2.mpfr(1)]
                    Bp = [gmpy2.mpfr(1)]
                    for _k in range(d):
                        ap.append(ap[-1] * a)
                        bp.append(bp[-1] * b)
                        Ap.append(Ap[-1] * A)
                        Bp.append(Bp[-1] * B)
                    out = []
                    for cf in (c0, c1):
                        val = gmpy2.mpc(0)
                        der = gmpy2.mpc(0)
                        mag = pa = pb = gmpy2.mpfr(0)
                        for i, c in enumerate(cf):
                            if c == 0:
                                continue
                            ia, ib = d - i, i
                            val += c * ap[ia] * bp[ib]
                            ac = abs(c)
                            mag += ac * Ap[ia] * Bp[ib]
                            if ia:
                                der += c * ia * ap[ia - 1] * bp[ib] * da
                                pa += ac * ia * Ap[ia - 1] * Bp[ib]
                            if ib:
                                der += c * ib * ap[ia] * bp[ib - 1] * db
                                pb += ac * ib * Ap[ia] * Bp[ib - 1]
                        out.append((val, der, mag, pa, pb))
                    (v0, d0, m0, pa0, pb0), (v1, d1, m1, pa1, pb1) = out
                    ea, eb = pa0 * ea + pb0 * eb + gamma * m0, pa1 * ea + pb1 * eb + gamma * m1
                    big = max(abs(v0), abs(v1))
                    s = int(gmpy2.floor(gmpy2.log2(big))) + 1 if big > 0 else 0
                    scale = gmpy2.mpfr(2) ** (-s)
                    a, b, da, db = v0 * scale, v1 * scale, d0 * scale, d1 * scale
                    ea, eb = ea * scale, eb * scale
                    L = d * L + s * gmpy2.log(2)
                g = a - zc * b
                dg = da - b - zc * db
                err = ea + abs(zc) * eb + 2 * unit * (abs(a) + abs(zc) * abs(b))
                ag = abs(g)
                logf[idx] = float(gmpy2.log(ag) + L) - self.log_const if ag > 0 else -math.inf
                logerr[idx] = float(gmpy2.log(err) + L) - self.log_const if err > 0 else -math.inf
                newton[idx] = complex(g / dg) if dg != 0 else 0j
        return newton, logf, logerr

    def max_precision(self) -> int:
        return 1024 + 64 * self.n * self.d

    def initial(self) -> np.ndarray:
        return centered_initial(self.affine.coeffs)


def _ldexp_c(v: np.ndarray, e: np.ndarray) -> np.ndarray:
    return np.ldexp(v.real, e) + 1j * np.ldexp(v.imag, e)


# ---------------------------------------------------------------------------
# estimates
# ---------------------------------------------------------------------------

@lru_cache(maxsize=64)
def periodic_roots(psi: RationalMap, n: int, target_radius: float = DEFAULT_TARGET_RADIUS) -> RootSet:
    """Affine roots of the periodic form of ``psi^n`` (the fixed points of ``psi^n`` other than infinity)."""
    ev = PeriodicFormEvaluator(psi, n)
    if ev.degree < 1:
        return RootSet(np.zeros(0, complex), np.zeros(0), 0.0)
    try:
        return aberth_roots(ev, target_radius)
    except RootFindingError as exc:
        # repeated roots: fall back to the exact squarefree split of the coefficients
        log.info("orbit evaluator could not certify (%s); using coefficient path", exc)
        return complex_roots(ev.affine, target_radius)


def _normalized_lifts(roots: np.ndarray, n_inf: int) -> tuple[np.ndarray, np.ndarray]:
    scale = np.maximum(np.abs(roots), 1.0)
    u0 = np.concatenate([roots / scale, np.ones(n_inf, dtype=complex)])
    u1 = np.concatenate([1.0 / scale, np.zeros(n_inf, dtype=complex)]).astype(complex)
    return u0, u1


def _escape_sums(phi: RationalMap, u0: np.ndarray, u1: np.ndarray, k: int) -> np.ndarray:
    """``sum_j log||Phi(u_j)|| / d^(j+1)`` along normalized orbits."""
    d = phi.degree
    c0 = np.array([float(c) for c in phi.phi0.coeffs])
    c1 = np.array([float(c) for c in phi.phi1.coeffs])
    total = np.zeros(u0.shape)
    for j in range(k):
        a = np.zeros(u0.shape, dtype=complex)
        b = np.zeros(u0.shape, dtype=complex)
        for i in range(d + 1):
            mono = u0 ** (d - i) * u1 ** i
            a += c0[i] * mono
            b += c1[i] * mono
        norm = np.maximum(np.abs(a), np.abs(b))
        total += np.log(norm) / d ** (j + 1)
        u0, u1 = a / norm, b / norm
    return total


def pairing_estimate(
    phi: RationalMap,
    psi: RationalMap,
    n: int,
    k: int = 0,
    target_radius: float = DEFAULT_TARGET_RADIUS,
    degree_cap: Optional[int] = None,
) -> PairingEstimate:
    """Average of ``h(phi^k(x)) / d_phi^k`` over the fixed points of ``psi^n``."""
    if k < 0:
        raise ValueError("k must be nonnegative")
    F = periodic_form(psi, n, degree_cap)
    N = F.degree
    rs = periodic_roots(psi, n, target_radius)
    f = F.dehomogenize()
    n_inf = N - f.degree
    m_F = _log_int(f.leading) + math.fsum(np.log(np.maximum(np.abs(rs.roots), 1.0)).tolist())
    err = float(np.sum(logplus_uncertainty(rs.roots, rs.radii)))
    total = m_F
    if k > 0 and not phi.is_squaring():
        u0, u1 = _normalized_lifts(rs.roots, n_inf)
        sums = _escape_sums(phi, u0, u1, k)
        # first-order propagation of the root radii: probe the disk boundary
        spread = np.zeros(len(rs.roots))
        for w in (1, 1j, -1, -1j):
            p0, p1 = _normalized_lifts(rs.roots + w * rs.radii, 0)
            spread = np.maximum(spread, np.abs(_escape_sums(phi, p0, p1, k)[: len(rs.roots)] - sums[: len(rs.roots)]))
        err += float(np.sum(spread)) + 16 * _EPS * k * N
        total += math.fsum(sums.tolist())
        if abs(phi.res) != 1:
            _, log_content = _pushforward_with_content(F, phi, k)
            total -= log_content / phi.degree ** k
    value = max(total, 0.0) / N
    est = PairingEstimate(value, n, k, N, float(err / N + 8 * _EPS * (abs(value) + 1)))
    est.history = [(n, k, value)]
    return est


def default_schedule(n_max: int, k_rule="n") -> list[tuple[int, int]]:
    """``[(n, k(n)) for n = 1..n_max]``; ``k_rule`` is ``"n"`` or a fixed integer."""
    if n_max < 1:
        raise ValueError("n_max must be at least 1")
    if k_rule == "n":
        return [(n, n) for n in range(1, n_max + 1)]
    k = int(k_rule)
    return [(n, k) for n in range(1, n_max + 1)]


def pairing_converged(
    phi: RationalMap,
    psi: RationalMap,
    schedule: Optional[Sequence[tuple[int, int]]] = None,
    stability_tol: float = 0.03,
    target_radius: float = DEFAULT_TARGET_RADIUS,
    degree_cap: Optional[int] = None,
) -> PairingEstimate:
    """Run a schedule of ``(n, k)`` estimates and report the last with the full history.

    ``k`` is forced to 0 when ``phi`` is the squaring map, whose canonical height
    is the standard height.  ``stable`` is false when the last three values
    spread by more than ``stability_tol``.
    """
    if schedule is None:
        schedule = default_schedule(6)
    schedule = list(schedule)
    if not schedule:
        raise ValueError("empty schedule")
    history = []
    last = None
    for n, k in schedule:
        if phi.is_squaring():
            k = 0
        last = pairing_estimate(phi, psi, n, k, target_radius, degree_cap)
        history.append((n, k, last.value))
    tail = [v for _, _, v in history[-3:]]
    last.history = history
    last.stable = len(tail) < 3 or (max(tail) - min(tail)) <= stability_tol
    if not last.stable:
        log.warning("pairing schedule not stable: last values %s", tail)
    return last


def symmetry_gap(phi: RationalMap, psi: RationalMap, n: int, k: int, **kw) -> tuple[PairingEstimate, PairingEstimate, float]:
    """Both directional estimates at ``(n, k)`` and their absolute difference."""
    a = pairing_estimate(phi, psi, n, k, **kw)
    b = pairing_estimate(psi, phi, n, k, **kw)
    return a, b, abs(a.value - b.value)


# ---------------------------------------------------------------------------
# good-reduction local pairing
# ---------------------------------------------------------------------------

def _padic_log_abs(x: int, p: int) -> float:
    if x == 0:
        return -math.inf
    v = 0
    while x % p == 0:
        x //= p
        v += 1
    return -v * math.log(p)


def local_pairing_good_reduction(s: tuple[int, int], t: tuple[int, int], p: int) -> float:
    """``log|s0 t1 - s1 t0|_p - log max|s|_p - log max|t|_p`` with the p-adic absolute value."""
    s0, s1 = (int(x) for x in s)
    t0, t1 = (int(x) for x in t)
    det = s0 * t1 - s1 * t0
    if det == 0:
        raise ValueError("the two sections have the same divisor")
    if p < 2:
        raise ValueError("p must be a prime")
    return (
        _padic_log_abs(det, p)
        - max(_padic_log_abs(s0, p), _padic_log_abs(s1, p))
        - max(_padic_log_abs(t0, p), _padic_log_abs(t1, p))
    )

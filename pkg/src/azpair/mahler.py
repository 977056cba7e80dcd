"""Complex roots of integer polynomials and log Mahler measure.

Roots are found by Aberth-Ehrlich simultaneous iteration.  Root positions are
held in double precision; the Newton corrections are evaluated in double
precision when a running error bound says that is trustworthy and in
multiprecision (gmpy2) otherwise, doubling the working precision until the
value clears its error bound.

Inclusion radii come from the Gerschgorin-type bound
``r_i = n |f(z_i)| / |lc * prod_{j != i} (z_i - z_j)|``: the union of the disks
contains every root and a connected component made of ``m`` disks contains
exactly ``m`` roots.  A root in a multi-disk component gets the summed diameters
of that component as its radius.
"""

from __future__ import annotations

import logging
import math
from fractions import Fraction
from dataclasses import dataclass
from typing import Optional, Sequence

import gmpy2
import numpy as np
from scipy.sparse.csgraph import connected_components

from .bigpoly import IntPolynomial, content_primitive

__all__ = [
    "RootSet",
    "MahlerValue",
    "RootFindingError",
    "CoefficientEvaluator",
    "complex_roots",
    "aberth_roots",
    "log_mahler",
    "mahler_from_roots",
    "initial_approximations",
    "logplus_uncertainty",
]

log = logging.getLogger(__name__)

_EPS = np.finfo(float).eps
_LN2 = math.log(2.0)
_START_SEED = 0x5EED


class RootFindingError(RuntimeError):
    """Aberth iteration failed to certify; carries the best roots and radii."""

    def __init__(self, message: str, roots: np.ndarray, radii: np.ndarray):
        super().__init__(message)
        self.roots = roots
        self.radii = radii


@dataclass
class RootSet:
    """Root approximations with per-root inclusion radii.

    ``residual`` is the largest ``|f(z)|`` relative to ``sum |a_i| |z|^i``.
    """

    roots: np.ndarray
    radii: np.ndarray
    residual: float
    certified: bool = True
    iterations: int = 0
    max_precision: int = 53

    def __len__(self) -> int:
        return len(self.roots)


@dataclass(frozen=True)
class MahlerValue:
    value: float
    error_bound: float


# ---------------------------------------------------------------------------
# helpers
# ---------------------------------------------------------------------------

def _log_abs_int(n: int) -> float:
    n = abs(n)
    bl = n.bit_length()
    if bl <= 1000:
        return math.log(n)
    shift = bl - 64
    return math.log(n >> shift) + shift * _LN2


def initial_approximations(log_abs_coeffs: Sequence[float], degree: int) -> np.ndarray:
    """Starting points on circles read off the Newton polygon of the coefficients.

    ``log_abs_coeffs[i]`` is ``log|a_i|`` (``-inf`` for zero coefficients).
    """
    pts = [(i, v) for i, v in enumerate(log_abs_coeffs) if np.isfinite(v)]
    # upper convex hull
    hull: list[tuple[int, float]] = []
    for p in pts:
        while len(hull) >= 2:
            (x1, y1), (x2, y2) = hull[-2], hull[-1]
            if (x2 - x1) * (p[1] - y1) - (y2 - y1) * (p[0] - x1) >= 0:
                hull.pop()
            else:
                break
        hull.append(p)
    rng = np.random.default_rng(_START_SEED)
    out = []
    offset = 0.0
    for (i0, v0), (i1, v1) in zip(hull, hull[1:]):
        count = i1 - i0
        radius = math.exp((v0 - v1) / count)
        angles = 2 * np.pi * (np.arange(count) / count) + offset + rng.uniform(0, 0.1)
        out.append(radius * np.exp(1j * angles))
        offset += 2 * np.pi / max(count, 1) / 3 + 0.4
    z = np.concatenate(out) if out else np.zeros(0, dtype=complex)
    lowest = hull[0][0]
    if lowest > 0:
        # roots at the origin: start them on a small circle inside everything else
        inner = 1e-3 * (float(np.min(np.abs(z))) if len(z) else 1.0)
        angles = 2 * np.pi * np.arange(lowest) / lowest + 0.3
        z = np.concatenate([inner * np.exp(1j * angles), z])
    if len(z) != degree:  # pragma: no cover - hull always spans 0..degree
        raise ValueError("Newton polygon does not span the degree")
    return z


def centered_initial(coeffs: Sequence[int], grid_bits: int = 6) -> np.ndarray:
    """Newton-polygon starting points recentred at the root centroid.

    The centroid ``-a_{n-1}/(n a_n)`` is rounded to a dyadic grid point ``p/2^g``
    and the polynomial is Taylor-shifted exactly, so the circles are read off
    the coefficients of ``2^(g n) f((w + p) / 2^g)``.
    """
    coeffs = list(coeffs)
    while coeffs and coeffs[-1] == 0:
        coeffs.pop()
    n = len(coeffs) - 1
    k0 = next(i for i, c in enumerate(coeffs) if c)
    if n - k0 < 1:
        return np.zeros(n, dtype=complex)
    if k0 > 0:
        rest = centered_initial(coeffs[k0:], grid_bits)
        inner = 1e-3 * float(np.min(np.abs(rest)))
        zeros = inner * np.exp(1j * (2 * np.pi * np.arange(k0) / k0 + 0.3))
        return np.concatenate([zeros, rest])
    scale = 1 << grid_bits
    shift = round(Fraction(-coeffs[n - 1], n * coeffs[n]) * scale)
    if shift == 0:
        logs = [(_log_abs_int(c) if c else -math.inf) for c in coeffs]
        return initial_approximations(logs, n)
    b = [c << (grid_bits * (n - i)) for i, c in enumerate(coeffs)]
    # Taylor shift by the integer ``shift``
    for i in range(n):
        for j in range(n - 1, i - 1, -1):
            b[j] += shift * b[j + 1]
    logs = [(_log_abs_int(c) if c else -math.inf) for c in b]
    w = initial_approximations(logs, n)
    return (w + shift) / scale


def logplus_uncertainty(z: np.ndarray, r: np.ndarray) -> np.ndarray:
    """Largest change of ``log+|alpha|`` for ``alpha`` within ``r`` of ``z``."""
    az = np.abs(z)
    lp = np.log(np.maximum(az, 1.0))
    up = np.log(np.maximum(az + r, 1.0)) - lp
    lo_mod = np.maximum(az - r, 0.0)
    with np.errstate(divide="ignore"):
        down = lp - np.log(np.maximum(lo_mod, 1.0))
    return np.maximum(up, down)


def _inclusion_radii(z: np.ndarray, log_upper_f: np.ndarray, log_lc: float) -> np.ndarray:
    n = len(z)
    if n == 1:
        return np.exp(log_upper_f - log_lc)
    diff = np.abs(z[:, None] - z[None, :])
    np.fill_diagonal(diff, 1.0)
    with np.errstate(divide="ignore"):
        logprod = np.log(diff).sum(axis=1)
    return np.exp(math.log(n) + log_upper_f - log_lc - logprod)


def _cluster_radii(z: np.ndarray, r: np.ndarray) -> np.ndarray:
    n = len(z)
    if n <= 1:
        return r.copy()
    if not np.all(np.isfinite(r)):
        return np.full(n, np.inf)
    diff = np.abs(z[:, None] - z[None, :])
    touching = diff <= (r[:, None] + r[None, :])
    ncomp, labels = connected_components(touching, directed=False)
    if ncomp == n:
        return r.copy()
    out = r.copy()
    for c in range(ncomp):
        members = labels == c
        if members.sum() > 1:
            out[members] = 2.0 * r[members].sum()
    return out


# ---------------------------------------------------------------------------
# evaluators
# ---------------------------------------------------------------------------

class CoefficientEvaluator:
    """Newton corrections of an integer polynomial from its coefficients.

    Double precision evaluation is done on the polynomial for ``|z| <= 1`` and on
    the reversed polynomial at ``1/z`` otherwise, both scaled so the largest
    coefficient is about one.  Each value comes with a running error bound.
    """

    def __init__(self, f: IntPolynomial):
        if f.degree < 1:
            raise ValueError("need a nonconstant polynomial")
        self.f = f
        self.degree = f.degree
        self.coeffs = list(f.coeffs)
        self.log_lc = _log_abs_int(f.leading)
        self.log_abs_coeffs = [(_log_abs_int(c) if c else -math.inf) for c in self.coeffs]
        maxbits = max(abs(c).bit_length() for c in self.coeffs)
        self.maxbits = maxbits
        self._shift = maxbits - 1
        self._scaled = np.array([math.ldexp(_to_float_scaled(c, self._shift), 0) for c in self.coeffs])
        self._abs_scaled = np.abs(self._scaled)

    def _horner(self, c: np.ndarray, x: np.ndarray):
        p = np.full(x.shape, c[-1], dtype=complex)
        dp = np.zeros(x.shape, dtype=complex)
        ax = np.abs(x)
        mag = np.full(x.shape, abs(c[-1]))
        for a in c[-2::-1]:
            dp = dp * x + p
            p = p * x + a
            mag = mag * ax + abs(a)
        return p, dp, mag

    def eval_double(self, z: np.ndarray):
        n = self.degree
        z = np.asarray(z, dtype=complex)
        newton = np.empty(z.shape, dtype=complex)
        logf = np.empty(z.shape)
        logerr = np.empty(z.shape)
        inner = np.abs(z) <= 1.0
        gamma = (4 * n + 8) * _EPS
        base = self._shift * _LN2
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            if inner.any():
                x = z[inner]
                p, dp, mag = self._horner(self._scaled, x)
                newton[inner] = p / dp
                logf[inner] = np.log(np.abs(p)) + base
                logerr[inner] = np.log(gamma * mag + 1e-300) + base
            if (~inner).any():
                x = z[~inner]
                w = 1.0 / x
                p, dp, mag = self._horner(self._scaled[::-1], w)
                newton[~inner] = x / (n - w * dp / p)
                lz = n * np.log(np.abs(x))
                logf[~inner] = np.log(np.abs(p)) + lz + base
                logerr[~inner] = np.log(gamma * mag + 1e-300) + lz + base
        return newton, logf, logerr

    def eval_mp(self, z: Sequence[complex], prec: int):
        n = self.degree
        newton = np.empty(len(z), dtype=complex)
        logf = np.empty(len(z))
        logerr = np.empty(len(z))
        with gmpy2.context(gmpy2.get_context(), precision=prec):
            coeffs = [gmpy2.mpfr(c) for c in self.coeffs]
            abs_coeffs = [abs(c) for c in coeffs]
            unit = gmpy2.mpfr(2) ** (-prec)
            for k, zk in enumerate(z):
                x = gmpy2.mpc(complex(zk))
                ax = abs(x)
                p = gmpy2.mpc(coeffs[-1])
                dp = gmpy2.mpc(0)
                mag = abs_coeffs[-1]
                for a, aa in zip(coeffs[-2::-1], abs_coeffs[-2::-1]):
                    dp = dp * x + p
                    p = p * x + a
                    mag = mag * ax + aa
                ap = abs(p)
                err = (4 * n + 8) * unit * mag
                logerr[k] = float(gmpy2.log(err)) if err > 0 else -math.inf
                logf[k] = float(gmpy2.log(ap)) if ap > 0 else -math.inf
                newton[k] = complex(p / dp) if dp != 0 else complex(0.0)
        return newton, logf, logerr

    def max_precision(self) -> int:
        return 4 * self.maxbits + 16 * self.degree + 512

    def initial(self) -> np.ndarray:
        return centered_initial(self.coeffs)


def _to_float_scaled(c: int, shift: int) -> float:
    """``c * 2**-shift`` as a float without overflow (underflows to 0 gracefully)."""
    if c == 0:
        return 0.0
    bl = abs(c).bit_length()
    if bl > 60:
        s = bl - 60
        return math.ldexp(float(c >> s) if c > 0 else -float((-c) >> s), s - shift)
    return math.ldexp(float(c), -shift)


# ---------------------------------------------------------------------------
# Aberth iteration
# ---------------------------------------------------------------------------

_RELIABLE = math.log(2.0 ** -12)


def _noisy(logf: np.ndarray, logerr: np.ndarray) -> np.ndarray:
    """True where the computed value is not clearly above its error bound.

    An exact zero with a zero error bound is a trustworthy value.
    """
    exact_zero = np.isneginf(logf) & np.isneginf(logerr)
    with np.errstate(invalid="ignore"):
        return ~((logerr - logf < _RELIABLE) | exact_zero)


def _evaluate(ev, z: np.ndarray, idx: np.ndarray, need_radius: np.ndarray | None = None):
    """Evaluate with precision escalation for the entries whose double value is noise.

    Returns newton corrections, log|f|, log(error), and the highest precision used.
    """
    newton, logf, logerr = ev.eval_double(z[idx])
    bad = _noisy(logf, logerr)
    if need_radius is not None:
        bad &= need_radius
    prec_used = 53
    if bad.any():
        prec = 128
        cap = ev.max_precision()
        todo = np.nonzero(bad)[0]
        while len(todo) and prec <= cap:
            nn, lf, le = ev.eval_mp(z[idx[todo]], prec)
            newton[todo], logf[todo], logerr[todo] = nn, lf, le
            prec_used = prec
            still = _noisy(lf, le)
            todo = todo[still]
            prec *= 2
    return newton, logf, logerr, prec_used


def aberth_roots(
    ev,
    target_radius: float = 1e-10,
    max_iterations: int = 500,
    z0: Optional[np.ndarray] = None,
) -> RootSet:
    """Run Aberth iteration against an evaluator and certify the result.

    ``ev`` provides ``degree``, ``log_lc``, ``eval_double(z)``, ``eval_mp(z, prec)``,
    ``max_precision()`` and ``initial()``.
    """
    n = ev.degree
    z = (ev.initial() if z0 is None else np.array(z0, dtype=complex)).copy()
    if n == 0:
        return RootSet(np.zeros(0, complex), np.zeros(0), 0.0)
    active = np.ones(n, dtype=bool)
    max_prec = 53
    it = 0
    stall = np.zeros(n, dtype=int)
    for it in range(1, max_iterations + 1):
        idx = np.nonzero(active)[0]
        if len(idx) == 0:
            break
        newton, logf, logerr, prec = _evaluate(ev, z, idx)
        max_prec = max(max_prec, prec)
        if n > 1:
            diff = z[idx][:, None] - z[None, :]
            diff[np.arange(len(idx)), idx] = 1.0
            with np.errstate(divide="ignore", invalid="ignore"):
                inv = 1.0 / diff
            inv[np.arange(len(idx)), idx] = 0.0
            s = inv.sum(axis=1)
            with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
                w = newton / (1.0 - newton * s)
        else:
            w = newton
        w = np.where(np.isfinite(w), w, 0.0)
        noise = _noisy(logf, logerr)
        step_ok = ~noise
        z_new = z[idx] - np.where(step_ok, w, 0.0)
        tiny = np.abs(w) <= 4 * _EPS * np.maximum(np.abs(z[idx]), 1e-300)
        z[idx] = z_new
        stall[idx] = np.where(noise | tiny, stall[idx] + 1, 0)
        active[idx] = stall[idx] < 2
    # final certification pass
    all_idx = np.arange(n)
    newton, logf, logerr, prec = _evaluate(ev, z, all_idx)
    max_prec = max(max_prec, prec)
    log_upper = np.logaddexp(logf, logerr)
    radii = _inclusion_radii(z, log_upper, ev.log_lc)
    radii = _cluster_radii(z, radii)
    radii = np.maximum(radii, 4 * _EPS * np.maximum(np.abs(z), 1e-300))
    with np.errstate(over="ignore"):
        residual = float(np.max(np.exp(logf - np.log(np.abs(z) + 1.0) * n))) if n else 0.0
    certified = bool(np.all(radii <= target_radius))
    rs = RootSet(z, radii, residual, certified, it, max_prec)
    if not certified:
        worst = float(np.max(radii))
        raise RootFindingError(
            f"could not certify roots to radius {target_radius:g} (worst {worst:.3g})", z, radii
        )
    return rs


# ---------------------------------------------------------------------------
# public operations
# ---------------------------------------------------------------------------

def _is_squarefree(f: IntPolynomial) -> bool:
    """Modular test: gcd(f, f') mod p trivial for a prime not dividing lc implies squarefree."""
    for p in (2305843009213693951, 4611686018427387847):
        if f.leading % p == 0:
            continue
        a = [c % p for c in f.coeffs]
        b = [c % p for c in f.derivative().coeffs]
        while b and b[-1] == 0:
            b.pop()
        if not b:
            return False
        while b:
            inv = pow(b[-1], p - 2, p)
            db = len(b) - 1
            while len(a) - 1 >= db and a:
                q = a[-1] * inv % p
                shift = len(a) - 1 - db
                for i in range(db + 1):
                    a[shift + i] = (a[shift + i] - q * b[i]) % p
                while a and a[-1] == 0:
                    a.pop()
            a, b = b, a
        if len(a) - 1 == 0:
            return True
    return False


def _squarefree_parts(f: IntPolynomial) -> list[tuple[IntPolynomial, int]]:
    """``f = const * prod g_k^k`` with squarefree primitive ``g_k``."""
    if _is_squarefree(f):
        return [(f, 1)]
    from sympy import Poly, symbols

    x = symbols("x")
    P = Poly(list(reversed(f.coeffs)), x)
    _, factors = P.sqf_list()
    out = []
    for g, k in factors:
        coeffs = [int(c) for c in reversed(g.all_coeffs())]
        out.append((IntPolynomial(coeffs), k))
    return out


def _linear_root(g: IntPolynomial) -> tuple[complex, float]:
    a0, a1 = g.coeffs
    from fractions import Fraction

    r = Fraction(-a0, a1)
    val = float(r)
    return complex(val), max(abs(float(r - Fraction(val))), 1e-300) * 2


def complex_roots(f: IntPolynomial, target_radius: float = 1e-10) -> RootSet:
    """All ``deg f`` complex roots with inclusion radii no larger than ``target_radius``."""
    if f.degree < 1:
        raise ValueError("need deg f >= 1")
    # split off zero roots exactly
    k0 = next(i for i, c in enumerate(f.coeffs) if c)
    roots: list[np.ndarray] = [np.zeros(k0, dtype=complex)]
    radii: list[np.ndarray] = [np.full(k0, 1e-300)]
    rest = IntPolynomial(f.coeffs[k0:])
    residual = 0.0
    iterations = 0
    max_prec = 53
    certified = True
    if rest.degree >= 1:
        for g, k in _squarefree_parts(content_primitive(rest)[1]):
            if g.degree < 1:
                continue
            if g.degree == 1:
                z, r = _linear_root(g)
                rz, rr = np.array([z]), np.array([r])
            else:
                rs = aberth_roots(CoefficientEvaluator(g), target_radius)
                rz, rr = rs.roots, rs.radii
                residual = max(residual, rs.residual)
                iterations = max(iterations, rs.iterations)
                max_prec = max(max_prec, rs.max_precision)
            for _ in range(k):
                roots.append(rz)
                radii.append(rr)
    z = np.concatenate(roots)
    r = np.concatenate(radii)
    return RootSet(z, r, residual, certified, iterations, max_prec)


def mahler_from_roots(log_lc: float, roots: np.ndarray, radii: np.ndarray) -> MahlerValue:
    """``log|lc| + sum log+|root|`` with the radius-propagated error bound."""
    lp = np.log(np.maximum(np.abs(roots), 1.0))
    err = logplus_uncertainty(roots, radii)
    value = log_lc + math.fsum(lp.tolist())
    bound = float(math.fsum(err.tolist())) + 8 * _EPS * (abs(value) + len(roots))
    return MahlerValue(float(value), float(bound))


def log_mahler(f: IntPolynomial, target_radius: float = 1e-10) -> MahlerValue:
    """Logarithmic Mahler measure ``log|lc| + sum log+|alpha|`` of a nonzero integer polynomial."""
    if f.is_zero():
        raise ValueError("Mahler measure of the zero polynomial is undefined")
    content, g = content_primitive(f)
    base = math.log(content) + _log_abs_int(g.leading)
    if g.degree < 1:
        return MahlerValue(base, 0.0)
    rs = complex_roots(g, target_radius)
    mv = mahler_from_roots(0.0, rs.roots, rs.radii)
    return MahlerValue(base + mv.value, mv.error_bound)

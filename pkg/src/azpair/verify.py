"""Verification harness: height-difference inequality, family bounds, sharpness
probe and the shared-preperiodic-points spot check.

Every case records ``lhs``, ``rhs`` and ``margin = rhs - lhs``; a case passes
when ``lhs <= rhs + slack`` with ``slack`` the combined numeric error, and is
flagged tight when it passes with a margin below twice that slack.
"""

from __future__ import annotations

import logging
import math
import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Optional, Sequence

import mpmath
import numpy as np

from . import dynmap
from .dynmap import RationalMap
from .families import lattes_pairing_quadrature, smyth_constant
from .heights import ProjPointQ, canonical_height, standard_height
from .pairing import pairing_converged, default_schedule, periodic_form, periodic_roots

__all__ = [
    "CaseResult",
    "VerificationReport",
    "check_height_diff",
    "check_family_inequalities",
    "sharpness_probe",
    "sharpness_gap",
    "equivalence_spot_check",
    "random_points",
    "farey_points",
    "near_fixed_points",
    "orbit_preperiodicity",
]

log = logging.getLogger(__name__)

LOG2 = math.log(2.0)


@dataclass
class CaseResult:
    input: str
    lhs: float
    rhs: float
    margin: float
    passed: bool
    slack: float = 0.0
    tight: bool = False
    status: str = ""

    def as_record(self) -> dict:
        return {
            "input": self.input,
            "lhs": self.lhs,
            "rhs": self.rhs,
            "margin": self.margin,
            "slack": self.slack,
            "pass": self.passed,
            "tight": self.tight,
            "status": self.status,
        }


@dataclass
class VerificationReport:
    name: str
    cases: list = field(default_factory=list)
    verdict: str = ""

    @property
    def all_pass(self) -> bool:
        return all(c.passed for c in self.cases)

    @property
    def min_margin(self) -> float:
        return min((c.margin for c in self.cases), default=math.inf)

    def add(self, input: str, lhs: float, rhs: float, slack: float = 0.0, status: str = "") -> CaseResult:
        margin = rhs - lhs
        passed = lhs <= rhs + slack
        case = CaseResult(input, lhs, rhs, margin, passed, slack, passed and margin < 2 * slack, status)
        self.cases.append(case)
        return case

    def as_records(self) -> list[dict]:
        return [dict(report=self.name, **c.as_record()) for c in self.cases]


# ---------------------------------------------------------------------------
# sample generators
# ---------------------------------------------------------------------------

def random_points(count: int, max_height: float = 10.0, seed: int = 0) -> list[ProjPointQ]:
    """Seeded random rational points of standard height at most ``max_height``."""
    rng = random.Random(seed)
    bound = int(math.floor(math.exp(max_height)))
    out = []
    while len(out) < count:
        p = rng.randint(-bound, bound)
        q = rng.randint(1, bound)
        if p == 0 and q == 0:
            continue
        out.append(ProjPointQ(p, q))
    return out


def farey_points(order: int, signed: bool = True) -> list[ProjPointQ]:
    """Farey fractions in ``[0, 1]`` of the given order, their negatives and reciprocals, and infinity."""
    a, b, c, d = 0, 1, 1, order
    seq = [Fraction(0)]
    while c <= order:
        k = (order + b) // d
        a, b, c, d = c, d, k * c - a, k * d - b
        seq.append(Fraction(a, b))
    pts = set()
    for x in seq:
        for y in ([x, -x] if signed else [x]):
            pts.add(y)
            if y != 0:
                pts.add(1 / y)
    return [ProjPointQ.from_value(x) for x in sorted(pts)] + [ProjPointQ(1, 0)]


def near_fixed_points(fmap: RationalMap, per_point: int = 4, max_height: float = 10.0) -> list[ProjPointQ]:
    """Rational points close to the real fixed points of ``fmap`` (continued-fraction convergents)."""
    F = periodic_form(fmap, 1)
    f = F.dehomogenize()
    out: list[ProjPointQ] = []
    if f.degree >= 1:
        roots = np.roots(list(reversed([float(c) for c in f.coeffs])))
        for r in roots:
            if abs(r.imag) > 1e-9 * max(1.0, abs(r)):
                continue
            x = float(r.real)
            for den in (10, 1000, 10 ** 4):
                frac = Fraction(x).limit_denominator(den)
                for eps in (0, Fraction(1, den)):
                    pt = ProjPointQ.from_value(frac + eps)
                    if standard_height(pt).value <= max_height and pt not in out:
                        out.append(pt)
            out = out[: per_point * (len(roots))]
    return out


# ---------------------------------------------------------------------------
# height-difference inequality
# ---------------------------------------------------------------------------

def check_height_diff(
    psi: RationalMap,
    pairing: float,
    sample: Sequence[ProjPointQ],
    tol: float = 1e-9,
    pairing_error: float = 0.0,
    name: Optional[str] = None,
) -> VerificationReport:
    """``h_psi(x) - h_st(x) <= pairing + h_psi(inf) + log 2`` on each sample point."""
    report = VerificationReport(name or f"height-diff {psi!r}")
    h_inf = canonical_height(psi, ProjPointQ(1, 0), tol)
    rhs = pairing + h_inf.value + LOG2
    for p in sample:
        h = canonical_height(psi, p, tol)
        lhs = h.value - standard_height(p).value
        slack = h.error_bound + h_inf.error_bound + pairing_error + 1e-12
        report.add(str(p), lhs, rhs, slack)
    report.verdict = "pass" if report.all_pass else "fail"
    return report


def sharpness_probe(tol: float = 1e-10) -> VerificationReport:
    """The point ``x = -1`` under ``coc(1)``: the margin equals the pairing itself.

    The recorded case carries the margin; ``status`` carries the gap
    ``log 2 - pairing`` that any smaller constant in place of ``log 2`` must exceed.
    """
    psi = dynmap.coc(1)
    smyth = smyth_constant(tol)
    report = check_height_diff(psi, smyth, [ProjPointQ(-1, 1)], tol, name="sharpness coc(1) at -1")
    case = report.cases[0]
    h_inf = case.rhs - smyth - LOG2
    case.status = f"gap={case.lhs - h_inf - smyth:.10f}"
    return report


def sharpness_gap(tol: float = 1e-10) -> tuple[float, float]:
    """``(margin, gap)`` at the sharpness probe; the gap is ``h(-1) - h_st(-1) - pairing - h(inf)``."""
    smyth = smyth_constant(tol)
    c = sharpness_probe(tol).cases[0]
    h_inf = c.rhs - smyth - LOG2
    return c.margin, c.lhs - h_inf - smyth


def check_family_inequalities(
    points_per_case: int = 50,
    seed: int = 0,
    tol: float = 1e-9,
    alphas: Iterable = (1, 2, 5, -3),
    cs: Iterable = (1, 2, 5, -7, 12),
    lattes_params: Iterable = ((1, 1), (1, 2), (2, 3)),
    lattes_tol: float = 1e-6,
) -> VerificationReport:
    """The three family bounds on sampled points.

    ``coc(alpha)``: ``h(alpha) + c2`` with ``c2 = smyth + log 2``; ``quad(c)``:
    ``h(c)/2 + log 4``; ``lattes(a, b)``: ``log sqrt(ab) + Theta + log 2`` with
    the measured ``Theta`` standing in for the unknown absolute constant.
    """
    report = VerificationReport("family inequalities")
    c2 = smyth_constant(1e-12) + LOG2
    c3 = math.log(4.0)
    sample = random_points(points_per_case, 10.0, seed)

    def run(fmap, bound, bound_err, label):
        h_inf = canonical_height(fmap, ProjPointQ(1, 0), tol)
        for p in sample:
            h = canonical_height(fmap, p, tol)
            lhs = h.value - standard_height(p).value
            report.add(f"{label} x={p}", lhs, bound, h.error_bound + h_inf.error_bound + bound_err + 1e-12)

    for a in alphas:
        a = Fraction(a)
        run(dynmap.coc(a), standard_height(ProjPointQ.from_value(a)).value + c2, 0.0, f"coc alpha={a}")
    for c in cs:
        c = Fraction(c)
        run(dynmap.quad(c), standard_height(ProjPointQ.from_value(c)).value / 2 + c3, 0.0, f"quad c={c}")
    for a, b in lattes_params:
        data = lattes_pairing_quadrature(a, b, lattes_tol, second_route=False)
        bound = 0.5 * math.log(a * b) + data.theta.value + LOG2
        run(dynmap.lattes(a, b), bound, data.theta.error_estimate, f"lattes a={a} b={b}")
    report.verdict = "pass" if report.all_pass else "fail"
    return report


# ---------------------------------------------------------------------------
# preperiodicity spot checks
# ---------------------------------------------------------------------------

def _mp_apply(fmap: RationalMap, u0, u1):
    d = fmap.degree
    p0 = [mpmath.mpf(1)]
    p1 = [mpmath.mpf(1)]
    for _ in range(d):
        p0.append(p0[-1] * u0)
        p1.append(p1[-1] * u1)
    a = mpmath.fsum(c * p0[d - i] * p1[i] for i, c in enumerate(fmap.phi0.coeffs) if c)
    b = mpmath.fsum(c * p0[d - i] * p1[i] for i, c in enumerate(fmap.phi1.coeffs) if c)
    return a, b


def _normalize(a, b):
    s = max(abs(a), abs(b))
    return a / s, b / s


def _chordal(u, v) -> float:
    num = abs(u[0] * v[1] - u[1] * v[0])
    den = mpmath.sqrt(abs(u[0]) ** 2 + abs(u[1]) ** 2) * mpmath.sqrt(abs(v[0]) ** 2 + abs(v[1]) ** 2)
    return num / den


def _refine_periodic(psi: RationalMap, n: int, z: complex, dps: int):
    """Newton-polish an approximate fixed point of ``psi^n`` at ``dps`` digits."""
    with mpmath.workdps(dps + 10):
        def g(x):
            u = (x, mpmath.mpf(1))
            for _ in range(n):
                u = _normalize(*_mp_apply(psi, *u))
            return u[0] - x * u[1]

        try:
            return mpmath.findroot(g, mpmath.mpc(z), tol=mpmath.mpf(10) ** (-dps))
        except (ValueError, ZeroDivisionError):
            return mpmath.mpc(z)


def _first_return(fmap: RationalMap, start, steps: int, dps: int):
    with mpmath.workdps(dps):
        thresh = mpmath.mpf(10) ** (-(dps // 2))
        orbit = [_normalize(*start)]
        for i in range(1, steps + 1):
            u = _normalize(*_mp_apply(fmap, *orbit[-1]))
            for j, v in enumerate(orbit):
                if _chordal(u, v) < thresh:
                    return i, j
            orbit.append(u)
    return None


def orbit_preperiodicity(fmap: RationalMap, start, steps: int = 60, dps_pair=(40, 80)) -> str:
    """Classify a point as ``"preperiodic"``, ``"not preperiodic"`` or ``"inconclusive"``.

    A genuine return hits the cycle exactly, so the first step at which the
    orbit comes back within ``10^(-dps/2)`` of an earlier point does not depend
    on the working precision.  Attraction to a cycle only looks like a return,
    and the step at which it does moves later as the precision grows.
    """
    lo, hi = dps_pair
    r1 = _first_return(fmap, start, steps, lo)
    r2 = _first_return(fmap, start, steps, hi)
    if r1 is not None and r1 == r2:
        return "preperiodic"
    if r1 is None and r2 is None:
        return "not preperiodic"
    if r1 is not None and (r2 is None or r2[0] > r1[0]):
        return "not preperiodic"
    return "inconclusive"


def equivalence_spot_check(
    phi: RationalMap,
    psi: RationalMap,
    n_max: int = 3,
    zero_tol: float = 1e-6,
    max_points: int = 24,
    steps: int = 60,
) -> VerificationReport:
    """Compare the pairing estimate with preperiodicity of ``psi``-periodic points under ``phi``.

    A vanishing pairing should come with every tested point being
    ``phi``-preperiodic; a positive pairing with at least one that is not.
    """
    est = pairing_converged(phi, psi, default_schedule(n_max))
    report = VerificationReport(f"equivalence {phi!r} vs {psi!r}")
    vanishing = est.value <= zero_tol + est.error_bound
    statuses = []
    tested = 0
    seen: list[complex] = []
    for n in range(1, n_max + 1):
        F = periodic_form(psi, n)
        starts = []
        if F.infinity_multiplicity() > 0 and n == 1:
            starts.append(("inf", (mpmath.mpf(1), mpmath.mpf(0))))
        rs = periodic_roots(psi, n)
        for z in rs.roots:
            if any(abs(z - w) < 1e-6 for w in seen):
                continue
            seen.append(complex(z))
            root = _refine_periodic(psi, n, complex(z), 90)
            starts.append((f"{complex(z):.6g} (period {n})", (root, mpmath.mpf(1))))
        for label, start in starts:
            if tested >= max_points:
                break
            tested += 1
            status = orbit_preperiodicity(phi, start, steps)
            statuses.append(status)
            ok = (status == "preperiodic") if vanishing else True
            report.add(label, est.value, zero_tol if vanishing else est.value, 0.0, status)
            # inconclusive numerics never count as a pass
            report.cases[-1].passed = ok and status != "inconclusive"
    if vanishing:
        if all(s == "preperiodic" for s in statuses):
            verdict = "consistent"
        elif any(s == "not preperiodic" for s in statuses):
            verdict = "inconsistent"
        else:
            verdict = "inconclusive"
    else:
        if any(s == "not preperiodic" for s in statuses):
            verdict = "consistent"
        elif all(s == "preperiodic" for s in statuses) and statuses:
            verdict = "inconsistent"
        else:
            verdict = "inconclusive"
    report.verdict = verdict
    if verdict == "inconsistent":
        for c in report.cases:
            c.passed = False
    return report

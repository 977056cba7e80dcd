"""Exact integer polynomials and binary forms.

Two coefficient conventions are used throughout the package:

* :class:`IntPolynomial` stores ``a_0, a_1, ..., a_n`` for ``a_0 + a_1 x + ... + a_n x^n``.
* :class:`IntBinaryForm` of degree ``m`` stores ``c_0, ..., c_m`` where ``c_i`` is the
  coefficient of ``x0^(m-i) * x1^i`` (ascending in ``x1``).  Dehomogenizing at
  ``x1 = 1`` therefore gives ``c_0 x^m + ... + c_m``: the form's coefficient list
  read backwards is the ascending coefficient list of the polynomial.

All arithmetic is exact (Python integers).  Large products go through Kronecker
substitution so that the multiplication happens inside a single big-integer product.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence, Union

__all__ = [
    "IntPolynomial",
    "IntBinaryForm",
    "DegenerateResultantError",
    "content_primitive",
    "resultant_binary",
    "resultant_sylvester",
    "resultant_with_parameters",
    "poly_mul",
]

_KRONECKER_THRESHOLD = 24


class DegenerateResultantError(ValueError):
    """Raised when a parametric resultant collapses to the zero form."""


# ---------------------------------------------------------------------------
# coefficient-list kernels
# ---------------------------------------------------------------------------

def _strip(coeffs: Sequence[int]) -> tuple[int, ...]:
    n = len(coeffs)
    while n and coeffs[n - 1] == 0:
        n -= 1
    return tuple(coeffs[:n])


def _pack(values: Sequence[int], nbytes: int) -> int:
    return int.from_bytes(b"".join(v.to_bytes(nbytes, "little") for v in values), "little")


def _kron_pack(a: Sequence[int], nbytes: int) -> int:
    pos = _pack([x if x > 0 else 0 for x in a], nbytes)
    neg = _pack([-x if x < 0 else 0 for x in a], nbytes)
    return pos - neg


def poly_mul(a: Sequence[int], b: Sequence[int]) -> list[int]:
    """Product of two ascending integer coefficient lists."""
    if not a or not b:
        return []
    la, lb = len(a), len(b)
    if min(la, lb) < _KRONECKER_THRESHOLD:
        out = [0] * (la + lb - 1)
        if la < lb:
            a, b, la, lb = b, a, lb, la
        for j, bj in enumerate(b):
            if bj:
                for i, ai in enumerate(a):
                    out[i + j] += ai * bj
        return out
    ma = max(abs(x) for x in a)
    mb = max(abs(x) for x in b)
    if ma == 0 or mb == 0:
        return [0] * (la + lb - 1)
    bound = ma * mb * min(la, lb)
    # each output digit lies in (-2^(bits-1), 2^(bits-1))
    nbytes = (bound.bit_length() + 2 + 7) // 8
    bits = 8 * nbytes
    prod = _kron_pack(a, nbytes) * _kron_pack(b, nbytes)
    nout = la + lb - 1
    half = 1 << (bits - 1)
    offset = _pack([half] * nout, nbytes)
    raw = (prod + offset).to_bytes(nbytes * nout, "little")
    return [
        int.from_bytes(raw[i * nbytes:(i + 1) * nbytes], "little") - half
        for i in range(nout)
    ]


def _poly_add(a: Sequence[int], b: Sequence[int]) -> list[int]:
    if len(a) < len(b):
        a, b = b, a
    out = list(a)
    for i, x in enumerate(b):
        out[i] += x
    return out


def _poly_pow(a: Sequence[int], e: int) -> list[int]:
    result: list[int] = [1]
    base = list(a)
    while e:
        if e & 1:
            result = poly_mul(result, base)
        e >>= 1
        if e:
            base = poly_mul(base, base)
    return result


# ---------------------------------------------------------------------------
# types
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class IntPolynomial:
    """Integer polynomial, coefficients in ascending degree order."""

    coeffs: tuple[int, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "coeffs", _strip(tuple(int(c) for c in self.coeffs)))

    @classmethod
    def from_roots(cls, roots: Iterable[int]) -> "IntPolynomial":
        out = [1]
        for r in roots:
            out = poly_mul(out, [-r, 1])
        return cls(out)

    @property
    def degree(self) -> int:
        """Degree, with -1 for the zero polynomial."""
        return len(self.coeffs) - 1

    @property
    def leading(self) -> int:
        return self.coeffs[-1] if self.coeffs else 0

    def is_zero(self) -> bool:
        return not self.coeffs

    def __call__(self, x):
        acc = 0
        for c in reversed(self.coeffs):
            acc = acc * x + c
        return acc

    def __add__(self, other: "IntPolynomial") -> "IntPolynomial":
        return IntPolynomial(_poly_add(self.coeffs, other.coeffs))

    def __neg__(self) -> "IntPolynomial":
        return IntPolynomial([-c for c in self.coeffs])

    def __sub__(self, other: "IntPolynomial") -> "IntPolynomial":
        return self + (-other)

    def __mul__(self, other):
        if isinstance(other, IntPolynomial):
            return IntPolynomial(poly_mul(self.coeffs, other.coeffs))
        return IntPolynomial([c * other for c in self.coeffs])

    __rmul__ = __mul__

    def __pow__(self, e: int) -> "IntPolynomial":
        return IntPolynomial(_poly_pow(self.coeffs, e))

    def derivative(self) -> "IntPolynomial":
        return IntPolynomial([i * c for i, c in enumerate(self.coeffs)][1:])

    def reflect(self) -> "IntPolynomial":
        """``f(-x)``."""
        return IntPolynomial([-c if i & 1 else c for i, c in enumerate(self.coeffs)])

    def homogenize(self, degree: int | None = None) -> "IntBinaryForm":
        degree = self.degree if degree is None else degree
        if degree < self.degree:
            raise ValueError(f"cannot homogenize degree {self.degree} polynomial to degree {degree}")
        padded = list(self.coeffs) + [0] * (degree + 1 - len(self.coeffs))
        return IntBinaryForm(degree, tuple(reversed(padded)))

    def __repr__(self) -> str:
        return f"IntPolynomial({list(self.coeffs)})"


@dataclass(frozen=True)
class IntBinaryForm:
    """Binary form of fixed degree; ``coeffs[i]`` multiplies ``x0^(degree-i) x1^i``."""

    degree: int
    coeffs: tuple[int, ...]

    def __post_init__(self):
        coeffs = tuple(int(c) for c in self.coeffs)
        if self.degree < 0 or len(coeffs) != self.degree + 1:
            raise ValueError(f"a degree {self.degree} form needs {self.degree + 1} coefficients, got {len(coeffs)}")
        object.__setattr__(self, "coeffs", coeffs)

    @classmethod
    def from_monomial_dict(cls, degree: int, terms: dict[int, int]) -> "IntBinaryForm":
        """Build from ``{power_of_x1: coefficient}``."""
        coeffs = [0] * (degree + 1)
        for i, c in terms.items():
            coeffs[i] += c
        return cls(degree, tuple(coeffs))

    def is_zero(self) -> bool:
        return not any(self.coeffs)

    def dehomogenize(self) -> IntPolynomial:
        """``F(x, 1)`` as an ascending polynomial."""
        return IntPolynomial(tuple(reversed(self.coeffs)))

    def dehomogenize_x0(self) -> IntPolynomial:
        """``F(1, y)`` as an ascending polynomial in ``y`` (chart at infinity)."""
        return IntPolynomial(self.coeffs)

    def infinity_multiplicity(self) -> int:
        """Multiplicity of (1:0) as a root, i.e. the drop in degree on dehomogenizing."""
        for i, c in enumerate(self.coeffs):
            if c:
                return i
        raise ValueError("zero form has no root multiplicities")

    def __call__(self, x0, x1):
        m = self.degree
        p0 = [1] * (m + 1)
        q1 = [1] * (m + 1)
        for i in range(1, m + 1):
            p0[i] = p0[i - 1] * x0
            q1[i] = q1[i - 1] * x1
        return sum(c * p0[m - i] * q1[i] for i, c in enumerate(self.coeffs))

    def __mul__(self, other):
        if isinstance(other, IntBinaryForm):
            return IntBinaryForm(self.degree + other.degree, tuple(poly_mul(self.coeffs, other.coeffs)))
        return IntBinaryForm(self.degree, tuple(c * other for c in self.coeffs))

    __rmul__ = __mul__

    def __add__(self, other: "IntBinaryForm") -> "IntBinaryForm":
        if other.degree != self.degree:
            raise ValueError("forms of different degree")
        return IntBinaryForm(self.degree, tuple(a + b for a, b in zip(self.coeffs, other.coeffs)))

    def __neg__(self) -> "IntBinaryForm":
        return IntBinaryForm(self.degree, tuple(-c for c in self.coeffs))

    def __sub__(self, other: "IntBinaryForm") -> "IntBinaryForm":
        return self + (-other)

    def __pow__(self, e: int) -> "IntBinaryForm":
        return IntBinaryForm(self.degree * e, tuple(_poly_pow(self.coeffs, e)) if e else (1,))

    def times_x0(self) -> "IntBinaryForm":
        return IntBinaryForm(self.degree + 1, self.coeffs + (0,))

    def times_x1(self) -> "IntBinaryForm":
        return IntBinaryForm(self.degree + 1, (0,) + self.coeffs)

    def __repr__(self) -> str:
        return f"IntBinaryForm({self.degree}, {list(self.coeffs)})"


Polyish = Union[IntPolynomial, IntBinaryForm]


def content_primitive(f: Polyish) -> tuple[int, Polyish]:
    """Split off the content and normalize the sign.

    Returns ``(c, g)`` with ``c >= 0`` and ``f == c * g`` up to sign; the leading
    coefficient of ``g`` (highest power of ``x``, i.e. first nonzero entry of a
    form) is positive.  The zero input gives ``(0, f)``.
    """
    c = math.gcd(*f.coeffs) if f.coeffs else 0
    if c == 0:
        return 0, f
    if isinstance(f, IntPolynomial):
        sign = 1 if f.coeffs[-1] > 0 else -1
        return c, IntPolynomial([sign * (x // c) for x in f.coeffs])
    lead = next(x for x in f.coeffs if x)
    sign = 1 if lead > 0 else -1
    return c, IntBinaryForm(f.degree, tuple(sign * (x // c) for x in f.coeffs))


# ---------------------------------------------------------------------------
# resultants
# ---------------------------------------------------------------------------

def _bareiss_det(rows: list[list[int]]) -> int:
    """Fraction-free Gaussian elimination determinant."""
    n = len(rows)
    if n == 0:
        return 1
    m = [list(r) for r in rows]
    sign = 1
    prev = 1
    for k in range(n - 1):
        if m[k][k] == 0:
            swap = next((i for i in range(k + 1, n) if m[i][k] != 0), None)
            if swap is None:
                return 0
            m[k], m[swap] = m[swap], m[k]
            sign = -sign
        pivot = m[k][k]
        rk = m[k]
        for i in range(k + 1, n):
            ri = m[i]
            mik = ri[k]
            for j in range(k + 1, n):
                ri[j] = (ri[j] * pivot - mik * rk[j]) // prev
            ri[k] = 0
        prev = pivot
    return sign * m[n - 1][n - 1]


def sylvester_matrix(f: Sequence[int], g: Sequence[int]) -> list[list[int]]:
    """Sylvester matrix of two coefficient lists in descending order (formal degrees len-1)."""
    m, n = len(f) - 1, len(g) - 1
    size = m + n
    rows = []
    for i in range(n):
        rows.append([0] * i + list(f) + [0] * (size - m - 1 - i))
    for i in range(m):
        rows.append([0] * i + list(g) + [0] * (size - n - 1 - i))
    return rows


def resultant_sylvester(F: IntBinaryForm, G: IntBinaryForm) -> int:
    """Resultant as the Sylvester determinant (Bareiss elimination)."""
    if F.degree == 0 and G.degree == 0:
        return 1
    return _bareiss_det(sylvester_matrix(F.coeffs, G.coeffs))


def _reduce_mod(a: list[int], b: list[int]) -> tuple[list[int], Fraction]:
    """Remainder of ``a`` modulo ``b`` (descending integer lists) up to a rational scalar.

    Returns ``(r, s)`` with ``a mod b == s * r`` over the rationals and ``r`` integral.
    """
    db = len(b) - 1
    da = len(a) - 1
    work = list(a)
    lb = b[0]
    scale = Fraction(1)
    for i in range(da - db + 1):
        q = work[i]
        if q == 0:
            continue
        g = math.gcd(q, lb)
        ql, lbl = q // g, lb // g
        if lbl != 1:
            for j in range(i + 1, da + 1):
                work[j] *= lbl
            scale /= lbl
        for j in range(1, db + 1):
            work[i + j] -= ql * b[j]
        work[i] = 0
    r = work[da - db + 1:] if db else []
    k = 0
    while k < len(r) and r[k] == 0:
        k += 1
    r = r[k:]
    if r:
        c = math.gcd(*r)
        if c > 1:
            r = [x // c for x in r]
            scale *= c
    return r, scale


def _resultant_dense(a: list[int], b: list[int]) -> Fraction:
    """Resultant of two polynomials (descending lists, nonzero leading coefficients)."""
    result = Fraction(1)
    while True:
        p, q = len(a) - 1, len(b) - 1
        if q == 0:
            return result * Fraction(b[0]) ** p
        if p == 0:
            return result * Fraction(a[0]) ** q
        if p < q:
            if (p * q) & 1:
                result = -result
            a, b = b, a
            continue
        # Res(a,b) = (-1)^{pq} Res(b,a) = (-1)^{pq} lc(b)^{p-s} Res(b, r)
        r, scale = _reduce_mod(a, b)
        if not r:
            return Fraction(0)
        s = len(r) - 1
        if (p * q) & 1:
            result = -result
        # Res(b, scale*r) = scale^q Res(b, r)
        result *= Fraction(b[0]) ** (p - s) * scale ** q
        a, b = b, r


def _resultant_forms_fast(F: Sequence[int], G: Sequence[int]) -> int:
    """Resultant of binary forms given by coefficient lists (descending in x, formal degrees)."""
    m, n = len(F) - 1, len(G) - 1
    if n == 0:
        return G[0] ** m
    if m == 0:
        return F[0] ** n
    f = list(F)
    g = list(G)
    sign_factor = Fraction(1)
    # strip leading zeros of f: Res_{m,n}(f,g) = (-1)^n g0 Res_{m-1,n}(f',g)
    while len(f) > 1 and f[0] == 0:
        if g[0] == 0:
            return 0
        if n & 1:
            sign_factor = -sign_factor
        sign_factor *= g[0]
        f = f[1:]
    if len(f) == 1 and f[0] == 0:
        return 0
    mf = len(f) - 1
    if mf == 0:
        value = sign_factor * Fraction(f[0]) ** n
        return int(value)
    # strip leading zeros of g symmetrically: Res_{m,n}(f,g) = (-1)^{mn} Res_{n,m}(g,f)
    while len(g) > 1 and g[0] == 0:
        # Res_{mf,n}(f,g) = (-1)^{mf n} Res_{n,mf}(g,f) = (-1)^{mf n} (-1)^{mf} f0 Res_{n-1,mf}(g',f)
        #                 = (-1)^{mf n} (-1)^{mf} f0 (-1)^{(n-1) mf} Res_{mf,n-1}(f,g') = f0 Res(f, g')
        sign_factor *= f[0]
        g = g[1:]
        n -= 1
    if len(g) == 1 and g[0] == 0:
        return 0
    value = sign_factor * _resultant_dense(f, g)
    if value.denominator != 1:
        raise ArithmeticError("non-integral resultant")  # pragma: no cover
    return int(value)


def resultant_binary(F: IntBinaryForm, G: IntBinaryForm, method: str = "auto") -> int:
    """Resultant of two binary forms with their formal degrees.

    ``method='sylvester'`` forces the fraction-free Sylvester determinant;
    ``'euclid'`` uses pseudo-remainder sequences; ``'auto'`` picks Sylvester for
    small sizes.
    """
    if method == "sylvester" or (method == "auto" and F.degree + G.degree <= 12):
        return resultant_sylvester(F, G)
    if F.degree == 0 and G.degree == 0:
        return 1
    return _resultant_forms_fast(F.coeffs, G.coeffs)


def _interpolate_integer(values: Sequence[int]) -> list[int]:
    """Ascending integer coefficients of the polynomial taking ``values[t]`` at ``t = 0..m``."""
    m = len(values) - 1
    diffs = list(values)
    newton = [diffs[0]]
    for k in range(1, m + 1):
        diffs = [diffs[i + 1] - diffs[i] for i in range(len(diffs) - 1)]
        newton.append(diffs[0])
    fact = 1
    for k in range(1, m + 1):
        fact *= k
        q, r = divmod(newton[k], fact)
        if r:
            raise ArithmeticError("values do not come from an integer polynomial")
        newton[k] = q
    # nested multiplication: p = a_m; p = p*(t-k) + a_k
    poly = [newton[m]]
    for k in range(m - 1, -1, -1):
        shifted = [0] + poly
        for i in range(len(poly)):
            shifted[i] -= k * poly[i]
        shifted[0] += newton[k]
        poly = shifted
    return poly


def resultant_with_parameters(
    F: IntBinaryForm, A: IntBinaryForm, B: IntBinaryForm, primitive: bool = True
) -> IntBinaryForm:
    """Form in ``(X0, X1)`` whose roots are ``(A(b):B(b))`` for the roots ``b`` of ``F``.

    This is ``Res_x(F, X1*A - X0*B)``, reconstructed exactly from its values at
    ``(X0:X1) = (t:1)`` for ``t = 0..deg F``; its primitive part unless
    ``primitive`` is false.
    """
    if F.is_zero():
        raise ValueError("F must be nonzero")
    if A.degree != B.degree:
        raise ValueError("A and B must have equal degree")
    m = F.degree
    values = []
    for t in range(m + 1):
        G = IntBinaryForm(A.degree, tuple(a - t * b for a, b in zip(A.coeffs, B.coeffs)))
        values.append(resultant_binary(F, G, method="euclid"))
    coeffs_in_t = _interpolate_integer(values)
    coeffs_in_t += [0] * (m + 1 - len(coeffs_in_t))
    # coefficient of X0^j X1^(m-j) is coeffs_in_t[j]; form index i <-> X0^(m-i)
    form = IntBinaryForm(m, tuple(coeffs_in_t[m - i] for i in range(m + 1)))
    if form.is_zero():
        raise DegenerateResultantError("A and B vanish simultaneously on a root of F")
    return content_primitive(form)[1] if primitive else form

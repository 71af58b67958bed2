"""Exact polynomial arithmetic: coefficients, sparse polynomials, resultants.

Coefficient layer: arbitrary-precision Gaussian integers (`GaussInt`) and
`Fraction` rationals, with exact-division helpers and the `"p/q"` text forms
used by every JSON artifact.

Polynomial layer: sparse multivariate polynomials over those coefficients.
A polynomial is a map from exponent vectors to coefficients; no floating
point enters any ring operation, so resultants computed here are exact.
Terms live in a dict and are ordered graded-lexicographically where order
matters (text output, leading-term division).

Univariate layer: polynomials over the multivariate ring together with the
Sylvester matrix and a fraction-free (division-exact) determinant, which is
how curve implicitization eliminates its parameter.
"""
from __future__ import annotations

import math
import re as _re
from dataclasses import dataclass
from fractions import Fraction


@dataclass(frozen=True)
class GaussInt:
    """Gaussian integer re + im*i with arbitrary-precision components."""

    re: int
    im: int = 0

    def __add__(self, other):
        other = _coerce(other)
        if other is NotImplemented:
            return NotImplemented
        return GaussInt(self.re + other.re, self.im + other.im)

    __radd__ = __add__

    def __sub__(self, other):
        other = _coerce(other)
        if other is NotImplemented:
            return NotImplemented
        return GaussInt(self.re - other.re, self.im - other.im)

    def __rsub__(self, other):
        other = _coerce(other)
        if other is NotImplemented:
            return NotImplemented
        return GaussInt(other.re - self.re, other.im - self.im)

    def __mul__(self, other):
        other = _coerce(other)
        if other is NotImplemented:
            return NotImplemented
        return GaussInt(
            self.re * other.re - self.im * other.im,
            self.re * other.im + self.im * other.re,
        )

    __rmul__ = __mul__

    def __neg__(self):
        return GaussInt(-self.re, -self.im)

    def __bool__(self):
        return self.re != 0 or self.im != 0

    def __eq__(self, other):
        if isinstance(other, GaussInt):
            return self.re == other.re and self.im == other.im
        if isinstance(other, int):
            return self.im == 0 and self.re == other
        return NotImplemented

    def __hash__(self):
        return hash(self.re) if self.im == 0 else hash((self.re, self.im))

    def conjugate(self) -> "GaussInt":
        return GaussInt(self.re, -self.im)

    def norm(self) -> int:
        return self.re * self.re + self.im * self.im

    def __repr__(self):
        return f"GaussInt({self.re}, {self.im})"


def _coerce(value):
    if isinstance(value, GaussInt):
        return value
    if isinstance(value, int):
        return GaussInt(value, 0)
    return NotImplemented


def gauss_exact_div(a: GaussInt, b: GaussInt) -> GaussInt:
    """Divide a by b, requiring the quotient to be a Gaussian integer."""
    if not b:
        raise ZeroDivisionError("division by zero Gaussian integer")
    num = a * b.conjugate()
    n = b.norm()
    qr, rr = divmod(num.re, n)
    qi, ri = divmod(num.im, n)
    if rr or ri:
        raise ValueError(f"{a!r} is not divisible by {b!r}")
    return GaussInt(qr, qi)


def coeff_exact_div(a, b):
    """Exact division in whichever coefficient domain a and b live in."""
    if isinstance(a, GaussInt) or isinstance(b, GaussInt):
        ga = a if isinstance(a, GaussInt) else GaussInt(a)
        gb = b if isinstance(b, GaussInt) else GaussInt(b)
        return gauss_exact_div(ga, gb)
    if isinstance(a, Fraction) or isinstance(b, Fraction):
        return Fraction(a) / Fraction(b)
    q, r = divmod(a, b)
    if r:
        return Fraction(a, b)
    return q


_RAT_RE = _re.compile(r"^(-?\d+)(?:/(\d+))?$")


def format_rational(value) -> str:
    """Render an int or Fraction as 'p' or 'p/q' (used by all JSON output)."""
    f = Fraction(value)
    if f.denominator == 1:
        return str(f.numerator)
    return f"{f.numerator}/{f.denominator}"


def parse_rational(text: str) -> Fraction:
    m = _RAT_RE.match(text.strip())
    if not m:
        raise ValueError(f"not a rational literal: {text!r}")
    num = int(m.group(1))
    den = int(m.group(2)) if m.group(2) else 1
    return Fraction(num, den)


def rational_point(value) -> list[str]:
    """Format a tuple of rationals as a JSON-ready list of strings."""
    return [format_rational(v) for v in value]


def parse_point(items) -> tuple[Fraction, ...]:
    return tuple(parse_rational(str(v)) for v in items)


def rational_circle_point(t: Fraction) -> tuple[Fraction, Fraction]:
    """Rational point on the unit circle from the slope parameter t.

    ((1-t^2)/(1+t^2), 2t/(1+t^2)); t sweeps all rational points except (-1, 0).
    """
    t = Fraction(t)
    d = 1 + t * t
    return ((1 - t * t) / d, 2 * t / d)


Coeff = int | Fraction | GaussInt


def _norm_coeff(c: Coeff) -> Coeff:
    if isinstance(c, Fraction) and c.denominator == 1:
        return int(c)
    return c


def _grlex_key(exps: tuple[int, ...]):
    return (sum(exps), exps)


class Polynomial:
    """Multivariate polynomial with exact coefficients.

    `variables` fixes the meaning and order of exponent-vector slots; all
    binary operations require identical variable tuples.
    """

    __slots__ = ("variables", "terms")

    def __init__(self, variables, terms=None):
        self.variables: tuple[str, ...] = tuple(variables)
        clean: dict[tuple[int, ...], Coeff] = {}
        for exps, c in (terms or {}).items():
            exps = tuple(int(e) for e in exps)
            if len(exps) != len(self.variables):
                raise ValueError(
                    f"exponent vector {exps} does not match variables {self.variables}"
                )
            if any(e < 0 for e in exps):
                raise ValueError(f"negative exponent in {exps}")
            c = _norm_coeff(c)
            if c:
                clean[exps] = clean.get(exps, 0) + c
                if not clean[exps]:
                    del clean[exps]
        self.terms = clean

    # -- constructors -------------------------------------------------

    @classmethod
    def zero(cls, variables) -> "Polynomial":
        return cls(variables, {})

    @classmethod
    def constant(cls, c: Coeff, variables) -> "Polynomial":
        variables = tuple(variables)
        return cls(variables, {(0,) * len(variables): c})

    @classmethod
    def variable(cls, name: str, variables) -> "Polynomial":
        variables = tuple(variables)
        if name not in variables:
            raise ValueError(f"unknown variable {name!r}")
        exps = tuple(1 if v == name else 0 for v in variables)
        return cls(variables, {exps: 1})

    # -- ring structure -----------------------------------------------

    def _coerce(self, other) -> "Polynomial | None":
        if isinstance(other, Polynomial):
            if other.variables != self.variables:
                raise ValueError(
                    f"variable mismatch: {self.variables} vs {other.variables}"
                )
            return other
        if isinstance(other, (int, Fraction, GaussInt)):
            return Polynomial.constant(other, self.variables)
        return None

    def __add__(self, other):
        other = self._coerce(other)
        if other is None:
            return NotImplemented
        out = dict(self.terms)
        for exps, c in other.terms.items():
            out[exps] = out.get(exps, 0) + c
        return Polynomial(self.variables, out)

    __radd__ = __add__

    def __neg__(self):
        return Polynomial(self.variables, {e: -c for e, c in self.terms.items()})

    def __sub__(self, other):
        other = self._coerce(other)
        if other is None:
            return NotImplemented
        return self + (-other)

    def __rsub__(self, other):
        other = self._coerce(other)
        if other is None:
            return NotImplemented
        return other + (-self)

    def __mul__(self, other):
        other = self._coerce(other)
        if other is None:
            return NotImplemented
        out: dict[tuple[int, ...], Coeff] = {}
        for e1, c1 in self.terms.items():
            for e2, c2 in other.terms.items():
                key = tuple(a + b for a, b in zip(e1, e2))
                out[key] = out.get(key, 0) + c1 * c2
        return Polynomial(self.variables, out)

    __rmul__ = __mul__

    def __pow__(self, n: int):
        if n < 0:
            raise ValueError("negative power")
        result = Polynomial.constant(1, self.variables)
        base = self
        while n:
            if n & 1:
                result = result * base
            base = base * base
            n >>= 1
        return result

    def __bool__(self):
        return bool(self.terms)

    def __eq__(self, other):
        if isinstance(other, (int, Fraction, GaussInt)):
            other = Polynomial.constant(other, self.variables)
        if not isinstance(other, Polynomial):
            return NotImplemented
        return self.variables == other.variables and self.terms == other.terms

    def __hash__(self):
        return hash((self.variables, frozenset(self.terms.items())))

    def __repr__(self):
        return f"Polynomial({self.variables}, {self.to_text()!r})"

    # -- queries -------------------------------------------------------

    def total_degree(self) -> int:
        if not self.terms:
            return 0
        return max(sum(e) for e in self.terms)

    def degree_in(self, name: str) -> int:
        idx = self.variables.index(name)
        if not self.terms:
            return 0
        return max(e[idx] for e in self.terms)

    def leading(self) -> tuple[tuple[int, ...], Coeff]:
        """Leading term under graded lex order."""
        if not self.terms:
            raise ValueError("zero polynomial has no leading term")
        exps = max(self.terms, key=_grlex_key)
        return exps, self.terms[exps]

    def coeff_l1_norm(self) -> float:
        total = 0.0
        for c in self.terms.values():
            if isinstance(c, GaussInt):
                total += math.hypot(float(c.re), float(c.im))
            else:
                total += abs(float(c))
        return total

    def integer_content(self) -> int:
        """gcd of all integer coefficients (0 for the zero polynomial)."""
        g = 0
        for c in self.terms.values():
            if isinstance(c, GaussInt):
                g = math.gcd(g, math.gcd(abs(c.re), abs(c.im)))
            elif isinstance(c, int):
                g = math.gcd(g, abs(c))
            else:
                raise ValueError("integer content requires integer coefficients")
        return g

    # -- calculus and evaluation ----------------------------------------

    def diff(self, name: str) -> "Polynomial":
        idx = self.variables.index(name)
        out: dict[tuple[int, ...], Coeff] = {}
        for exps, c in self.terms.items():
            e = exps[idx]
            if e == 0:
                continue
            key = exps[:idx] + (e - 1,) + exps[idx + 1 :]
            out[key] = out.get(key, 0) + c * e
        return Polynomial(self.variables, out)

    def evaluate(self, point):
        """Horner-style evaluation; exact for rational input, float otherwise."""
        point = tuple(point)
        if len(point) != len(self.variables):
            raise ValueError("point dimension mismatch")
        if not self.terms:
            return 0
        return _horner(self.terms, point, 0, len(self.variables))

    def substitute(self, mapping: dict[str, "Polynomial"]) -> "Polynomial":
        """Substitute a polynomial for every variable (all over the same ring)."""
        targets = list(mapping.values())
        if not targets:
            raise ValueError("empty substitution")
        out_vars = targets[0].variables
        for name in self.variables:
            if name not in mapping:
                raise ValueError(f"no substitution given for {name!r}")
            if mapping[name].variables != out_vars:
                raise ValueError("substitution polynomials disagree on variables")
        pow_cache: dict[tuple[str, int], Polynomial] = {}

        def power(name: str, e: int) -> Polynomial:
            key = (name, e)
            if key not in pow_cache:
                if e == 0:
                    pow_cache[key] = Polynomial.constant(1, out_vars)
                else:
                    pow_cache[key] = power(name, e - 1) * mapping[name]
            return pow_cache[key]

        acc = Polynomial.zero(out_vars)
        for exps, c in self.terms.items():
            term = Polynomial.constant(c, out_vars)
            for name, e in zip(self.variables, exps):
                if e:
                    term = term * power(name, e)
            acc = acc + term
        return acc

    # -- text form -------------------------------------------------------

    def to_text(self) -> str:
        if not self.terms:
            return "0"
        parts = []
        for exps in sorted(self.terms, key=_grlex_key, reverse=True):
            c = self.terms[exps]
            bits = [_format_coeff(c)]
            for name, e in zip(self.variables, exps):
                if e == 1:
                    bits.append(name)
                elif e > 1:
                    bits.append(f"{name}^{e}")
            parts.append("*".join(bits))
        return " + ".join(parts)

    @classmethod
    def from_text(cls, text: str, variables) -> "Polynomial":
        variables = tuple(variables)
        text = text.strip()
        if text == "0":
            return cls.zero(variables)
        terms: dict[tuple[int, ...], Coeff] = {}
        for raw in text.split(" + "):
            bits = raw.strip().split("*")
            c = _parse_coeff(bits[0])
            exps = [0] * len(variables)
            for bit in bits[1:]:
                if "^" in bit:
                    name, _, e = bit.partition("^")
                    power = int(e)
                else:
                    name, power = bit, 1
                if name not in variables:
                    raise ValueError(f"unknown variable {name!r} in {raw!r}")
                exps[variables.index(name)] += power
            key = tuple(exps)
            terms[key] = terms.get(key, 0) + c
        return cls(variables, terms)


def _horner(terms, point, idx, nvars):
    if idx == nvars - 1:
        by_e = sorted(((e[idx], c) for e, c in terms.items()), reverse=True)
        acc = 0
        prev = None
        for e, c in by_e:
            if prev is not None:
                acc = acc * point[idx] ** (prev - e)
            acc = acc + c
            prev = e
        return acc * point[idx] ** prev if prev else acc

    groups: dict[int, dict] = {}
    for exps, c in terms.items():
        groups.setdefault(exps[idx], {})[exps] = c
    acc = 0
    prev = None
    for e in sorted(groups, reverse=True):
        val = _horner(groups[e], point, idx + 1, nvars)
        if prev is not None:
            acc = acc * point[idx] ** (prev - e)
        acc = acc + val
        prev = e
    return acc * point[idx] ** prev if prev else acc


_GAUSS_RE = _re.compile(r"^\((-?\d+),(-?\d+)\)$")


def _format_coeff(c: Coeff) -> str:
    if isinstance(c, GaussInt):
        return f"({c.re},{c.im})"
    return format_rational(c)


def _parse_coeff(text: str) -> Coeff:
    text = text.strip()
    m = _GAUSS_RE.match(text)
    if m:
        return GaussInt(int(m.group(1)), int(m.group(2)))
    return _norm_coeff(parse_rational(text))


# -- exact division ------------------------------------------------------


def poly_exact_div(a: Polynomial, b: Polynomial) -> Polynomial:
    """Divide a by b when b divides a exactly; raise ValueError otherwise."""
    if a.variables != b.variables:
        raise ValueError("variable mismatch in division")
    if not b:
        raise ZeroDivisionError("polynomial division by zero")
    quotient = Polynomial.zero(a.variables)
    rem = a
    b_exps, b_c = b.leading()
    while rem:
        r_exps, r_c = rem.leading()
        diff = tuple(x - y for x, y in zip(r_exps, b_exps))
        if any(d < 0 for d in diff):
            raise ValueError("division is not exact (monomial mismatch)")
        q_c = coeff_exact_div(r_c, b_c)
        if isinstance(q_c, Fraction) and q_c.denominator != 1 and not isinstance(r_c, Fraction):
            raise ValueError("division is not exact (coefficient mismatch)")
        term = Polynomial(a.variables, {diff: q_c})
        quotient = quotient + term
        rem = rem - term * b
    return quotient


def _ring_exact_div(a, b):
    if isinstance(b, int):
        if b == 1:
            return a
        if b == -1:
            return -a
    if isinstance(a, Polynomial) or isinstance(b, Polynomial):
        pa = a if isinstance(a, Polynomial) else Polynomial.constant(a, b.variables)
        pb = b if isinstance(b, Polynomial) else Polynomial.constant(b, a.variables)
        return poly_exact_div(pa, pb)
    return coeff_exact_div(a, b)


# -- univariate layer ------------------------------------------------------


@dataclass(frozen=True)
class UniPoly:
    """Univariate polynomial whose coefficients live in the Polynomial ring
    (or are plain exact scalars). coeffs[i] multiplies var**i."""

    var: str
    coeffs: tuple

    @classmethod
    def from_dict(cls, var: str, by_power: dict) -> "UniPoly":
        if not by_power:
            return cls(var, ())
        top = max(by_power)
        coeffs = [0] * (top + 1)
        for p, c in by_power.items():
            if p < 0:
                raise ValueError("negative power")
            coeffs[p] = c
        return cls(var, _trim(coeffs))

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    def is_zero(self) -> bool:
        return not self.coeffs

    def leading_coeff(self):
        if self.is_zero():
            raise ValueError("zero polynomial")
        return self.coeffs[-1]

    def evaluate(self, x):
        acc = 0
        for c in reversed(self.coeffs):
            acc = acc * x + c
        return acc


def _trim(coeffs: list) -> tuple:
    while coeffs and not _is_nonzero(coeffs[-1]):
        coeffs.pop()
    return tuple(coeffs)


def _is_nonzero(x) -> bool:
    return bool(x)


def sylvester_matrix(p: UniPoly, q: UniPoly) -> list[list]:
    """Sylvester matrix with p's coefficient rows first, descending powers."""
    if p.var != q.var:
        raise ValueError("main-variable mismatch")
    m, n = p.degree, q.degree
    if p.is_zero() or q.is_zero() or m < 1 or n < 1:
        raise ValueError("resultant needs positive degrees in the main variable")
    size = m + n
    pd = list(reversed(p.coeffs))
    qd = list(reversed(q.coeffs))
    rows = []
    for i in range(n):
        rows.append([0] * i + pd + [0] * (n - 1 - i))
    for i in range(m):
        rows.append([0] * i + qd + [0] * (m - 1 - i))
    assert all(len(r) == size for r in rows)
    return rows


def bareiss_determinant(matrix: list[list]):
    """Exact determinant by fraction-free elimination.

    Every interior division is exact over the coefficient ring, which keeps
    intermediate entries as small as minors allow. Rows are swapped (with a
    sign flip) when a pivot vanishes; an unfillable pivot column means the
    determinant is zero.
    """
    m = [row[:] for row in matrix]
    size = len(m)
    if any(len(row) != size for row in m):
        raise ValueError("matrix is not square")
    if size == 0:
        return 1
    sign = 1
    prev = 1
    for k in range(size - 1):
        if not _is_nonzero(m[k][k]):
            for r in range(k + 1, size):
                if _is_nonzero(m[r][k]):
                    m[k], m[r] = m[r], m[k]
                    sign = -sign
                    break
            else:
                return 0 * prev
        pivot = m[k][k]
        for i in range(k + 1, size):
            for j in range(k + 1, size):
                num = pivot * m[i][j] - m[i][k] * m[k][j]
                m[i][j] = _ring_exact_div(num, prev)
            m[i][k] = 0
        prev = pivot
    result = m[size - 1][size - 1]
    return result if sign > 0 else -result


def sylvester_resultant(p: UniPoly, q: UniPoly):
    """Resultant of p and q w.r.t. their shared main variable."""
    return bareiss_determinant(sylvester_matrix(p, q))


def split_re_im(p: Polynomial) -> tuple[Polynomial, Polynomial]:
    """Split a Gaussian-coefficient polynomial into real and imaginary parts."""
    re_terms: dict[tuple[int, ...], Coeff] = {}
    im_terms: dict[tuple[int, ...], Coeff] = {}
    for exps, c in p.terms.items():
        if isinstance(c, GaussInt):
            if c.re:
                re_terms[exps] = c.re
            if c.im:
                im_terms[exps] = c.im
        else:
            re_terms[exps] = c
    return (
        Polynomial(p.variables, re_terms),
        Polynomial(p.variables, im_terms),
    )

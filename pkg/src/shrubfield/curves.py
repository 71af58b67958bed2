"""Plane and sphere curves: cusped wheel curves, segments, arcs, lifts.

The building blocks of every synthesized boundary are k-cusped hypocycloids
(implicitized exactly through a resultant), straight segments (realized on the
sphere by a non-polynomial but analytic closed form), and circles. This module
owns their parametric forms, the exact implicit polynomials, rational affine
deformation, and the stereographic transfer between plane and sphere.

Conventions: the plane is identified with the sphere minus the north pole via
stereographic projection from (0,0,1); plane coordinates are (x, y), sphere
coordinates (x, y, z) with the unit-sphere constraint applied by callers.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

from .poly_core import (
    GaussInt,
    Polynomial,
    UniPoly,
    split_re_im,
    sylvester_resultant,
)

PLANE_VARS = ("x", "y")
SPHERE_VARS = ("x", "y", "z")


class DomainError(ValueError):
    """Evaluation requested where a function is not defined/analytic."""


# -- parametric hypocycloid -------------------------------------------------


def param_point(k: int, theta: float) -> tuple[float, float]:
    """Point of the k-cusped hypocycloid at parameter theta."""
    if k < 3:
        raise ValueError("cusp count must be at least 3")
    n = k - 1
    return (
        n * math.cos(theta) + math.cos(n * theta),
        n * math.sin(theta) - math.sin(n * theta),
    )


def param_velocity(k: int, theta: float) -> tuple[float, float]:
    """Parameter derivative of the curve; vanishes exactly at the cusps."""
    if k < 3:
        raise ValueError("cusp count must be at least 3")
    n = k - 1
    return (
        -n * math.sin(theta) - n * math.sin(n * theta),
        n * math.cos(theta) - n * math.cos(n * theta),
    )


def cusp_angles(k: int) -> list[float]:
    if k < 3:
        raise ValueError("cusp count must be at least 3")
    return [2.0 * math.pi * j / k for j in range(k)]


def cusps(k: int) -> list[tuple[float, float]]:
    """The k cusp points k*(cos 2pi j/k, sin 2pi j/k), j = 0..k-1."""
    if k < 3:
        raise ValueError("cusp count must be at least 3")
    return [
        (k * math.cos(a), k * math.sin(a)) for a in cusp_angles(k)
    ]


def axis_cusps(k: int) -> list[tuple[Fraction, Fraction]]:
    """The four rational cusps (+-k, 0), (0, +-k); requires k divisible by 4.

    These are the only cusps with rational coordinates (cos(2pi j/k) is
    rational only for angles that are multiples of a quarter turn), so exact
    junction placement is restricted to them.
    """
    if k % 4:
        raise ValueError("rational cusps exist only when 4 divides k")
    kf = Fraction(k)
    z = Fraction(0)
    return [(kf, z), (z, kf), (-kf, z), (z, -kf)]


# -- affine maps --------------------------------------------------------------


@dataclass(frozen=True)
class AffineMap:
    """Rational affine map p -> M p + b of the plane."""

    matrix: tuple[tuple[Fraction, Fraction], tuple[Fraction, Fraction]]
    offset: tuple[Fraction, Fraction] = (Fraction(0), Fraction(0))

    @classmethod
    def identity(cls) -> "AffineMap":
        one, zero = Fraction(1), Fraction(0)
        return cls(((one, zero), (zero, one)))

    @classmethod
    def from_columns(cls, col0, col1, offset=(0, 0)) -> "AffineMap":
        c0 = tuple(Fraction(v) for v in col0)
        c1 = tuple(Fraction(v) for v in col1)
        off = tuple(Fraction(v) for v in offset)
        return cls(((c0[0], c1[0]), (c0[1], c1[1])), off)

    def determinant(self) -> Fraction:
        (a, b), (c, d) = self.matrix
        return a * d - b * c

    def apply(self, point):
        (a, b), (c, d) = self.matrix
        x, y = point
        return (a * x + b * y + self.offset[0], c * x + d * y + self.offset[1])

    def inverse(self) -> "AffineMap":
        (a, b), (c, d) = self.matrix
        det = self.determinant()
        if det == 0:
            raise ValueError("affine matrix is singular")
        inv = ((d / det, -b / det), (-c / det, a / det))
        e, f = self.offset
        ioff = (-(inv[0][0] * e + inv[0][1] * f), -(inv[1][0] * e + inv[1][1] * f))
        return AffineMap(inv, ioff)


# -- specs and implicit curves ------------------------------------------------


@dataclass(frozen=True)
class HypocycloidSpec:
    """A k-cusped hypocycloid deformed by a rational affine map."""

    k: int
    affine: AffineMap = field(default_factory=AffineMap.identity)

    def __post_init__(self):
        if self.k < 3:
            raise ValueError("cusp count must be at least 3")
        if self.affine.determinant() == 0:
            raise ValueError("affine matrix is singular")

    def point(self, theta: float) -> tuple[float, float]:
        x, y = param_point(self.k, theta)
        fx, fy = self.affine.apply((Fraction(0), Fraction(0)))
        (a, b), (c, d) = self.affine.matrix
        return (float(a) * x + float(b) * y + float(fx),
                float(c) * x + float(d) * y + float(fy))


@dataclass(frozen=True)
class SegmentSpec:
    """A straight plane segment between two distinct rational endpoints."""

    start: tuple[Fraction, Fraction]
    end: tuple[Fraction, Fraction]

    def __post_init__(self):
        object.__setattr__(
            self, "start", tuple(Fraction(v) for v in self.start)
        )
        object.__setattr__(self, "end", tuple(Fraction(v) for v in self.end))
        if self.start == self.end:
            raise ValueError("segment endpoints must be distinct")

    def point(self, t: float):
        s, e = self.start, self.end
        return (
            (1 - t) * float(s[0]) + t * float(e[0]),
            (1 - t) * float(s[1]) + t * float(e[1]),
        )

    def midpoint(self) -> tuple[Fraction, Fraction]:
        return (
            (self.start[0] + self.end[0]) / 2,
            (self.start[1] + self.end[1]) / 2,
        )


@dataclass(frozen=True)
class ImplicitCurve:
    """Zero set of a polynomial, in the plane or on the sphere.

    `exceptional_points` lists the finitely many points where an associated
    analytic description breaks down (empty for polynomials, which are
    analytic everywhere).
    """

    poly: Polynomial
    domain: str  # "plane" | "sphere"
    exceptional_points: tuple = ()

    def __post_init__(self):
        if self.domain not in ("plane", "sphere"):
            raise ValueError(f"unknown domain {self.domain!r}")
        expected = PLANE_VARS if self.domain == "plane" else SPHERE_VARS
        if self.poly.variables != expected:
            raise ValueError(
                f"{self.domain} curve must use variables {expected}"
            )
        if not self.poly:
            raise ValueError("implicit curve polynomial is zero")


# -- exact implicitization -----------------------------------------------------


def _hypo_eliminant_pair(k: int) -> tuple[UniPoly, UniPoly]:
    """The two parameter polynomials whose common root encodes curve membership.

    Writing the parametrization through a unimodular complex parameter and
    clearing denominators gives one polynomial whose x-dependence is linear
    and one whose y-dependence is linear, with Gaussian-integer coefficients.
    """
    n = k - 1
    x = Polynomial.variable("x", PLANE_VARS)
    y = Polynomial.variable("y", PLANE_VARS)
    one = Polynomial.constant(1, PLANE_VARS)
    nn = Polynomial.constant(n, PLANE_VARS)
    two_i = Polynomial.constant(GaussInt(0, 2), PLANE_VARS)

    p = UniPoly.from_dict(
        "t", {2 * n: one, n + 1: nn, n: -2 * x, n - 1: nn, 0: one}
    )
    q = UniPoly.from_dict(
        "t", {2 * n: one, n + 1: -nn, n: two_i * y, n - 1: nn, 0: -one}
    )
    return p, q


_implicit_cache: dict[int, "ImplicitCurve"] = {}


def implicitize(k: int) -> ImplicitCurve:
    """Exact plane polynomial whose real zero set is the k-cusped hypocycloid.

    The parameter is eliminated by a Sylvester resultant over the
    Gaussian-integer polynomial ring; the (complex) resultant P splits as
    P1 + i*P2 and the returned polynomial is F = P1^2 + P2^2 >= 0. The raw
    determinant is kept (no content normalization) for reproducibility; the
    integer content is recorded in `implicit_metadata`.
    """
    if k < 3:
        raise ValueError("cusp count must be at least 3")
    if k not in _implicit_cache:
        p, q = _hypo_eliminant_pair(k)
        resultant = sylvester_resultant(p, q)
        p1, p2 = split_re_im(resultant)
        f = p1 * p1 + p2 * p2
        _implicit_cache[k] = ImplicitCurve(poly=f, domain="plane")
        _metadata_cache[k] = {
            "k": k,
            "degree": f.total_degree(),
            "terms": len(f.terms),
            "integer_content": f.integer_content(),
            "resultant_degree": max(p1.total_degree(), p2.total_degree()),
        }
    return _implicit_cache[k]


_metadata_cache: dict[int, dict] = {}


def implicit_metadata(k: int) -> dict:
    """Degree/content bookkeeping for the exact implicit form."""
    implicitize(k)
    return dict(_metadata_cache[k])


def normalized_residual(poly: Polynomial, point) -> float:
    """|F(point)| scaled by coefficient mass and radius^degree.

    Raw resultant coefficients are huge; dividing by the coefficient 1-norm
    times max(1, r)^deg makes residual tolerances independent of k.
    """
    value = abs(float(poly.evaluate(tuple(float(c) for c in point))))
    r = max(1.0, math.hypot(*[float(c) for c in point]))
    scale = 1.0 + poly.coeff_l1_norm() * r ** poly.total_degree()
    return value / scale


def poly_gradient(poly: Polynomial) -> tuple[Polynomial, ...]:
    return tuple(poly.diff(v) for v in poly.variables)


# -- affine deformation of implicit curves ------------------------------------


def apply_affine(curve: ImplicitCurve, affine: AffineMap) -> ImplicitCurve:
    """Implicit form of the image of a plane curve under an affine map.

    The zero set maps forward; the polynomial is composed with the inverse
    map and stays polynomial with rational coefficients.
    """
    if curve.domain != "plane":
        raise ValueError("affine deformation applies to plane curves")
    inv = affine.inverse()
    (a, b), (c, d) = inv.matrix
    e, f = inv.offset
    x = Polynomial.variable("x", PLANE_VARS)
    y = Polynomial.variable("y", PLANE_VARS)
    sub = {
        "x": a * x + b * y + Polynomial.constant(e, PLANE_VARS),
        "y": c * x + d * y + Polynomial.constant(f, PLANE_VARS),
    }
    moved = curve.poly.substitute(sub)
    moved_exc = tuple(affine.apply(p) for p in curve.exceptional_points)
    return ImplicitCurve(poly=moved, domain="plane", exceptional_points=moved_exc)


# -- stereographic transfer ----------------------------------------------------


def plane_to_sphere(point) -> tuple:
    """Inverse stereographic image of a plane point; exact on rational input."""
    u, v = point
    s = u * u + v * v
    d = s + 1
    return (2 * u / d, 2 * v / d, (s - 1) / d)


def sphere_to_plane(point) -> tuple:
    x, y, z = point
    if z == 1:
        raise DomainError("north pole has no stereographic image")
    return (x / (1 - z), y / (1 - z))


def lift_to_sphere(p: Polynomial, n: int) -> ImplicitCurve:
    """Clear a plane polynomial to the sphere through the stereographic chart.

    Returns Q(x,y,z) = (1-z)^n * p(x/(1-z), y/(1-z)) expanded as a polynomial;
    requires n >= deg p. On the sphere, Q vanishes exactly on the preimage of
    p's zero set together with the north pole (for n >= 1).
    """
    if p.variables != PLANE_VARS:
        raise ValueError("lift expects a plane polynomial in (x, y)")
    deg = p.total_degree()
    if n < deg:
        raise ValueError(f"clearing exponent {n} is below the degree {deg}")
    one_minus_z = Polynomial.from_text("1 + -1*z", SPHERE_VARS)
    x = Polynomial.variable("x", SPHERE_VARS)
    y = Polynomial.variable("y", SPHERE_VARS)
    out = Polynomial.zero(SPHERE_VARS)
    for (a, b), c in p.terms.items():
        term = Polynomial.constant(c, SPHERE_VARS)
        term = term * x**a * y**b * one_minus_z ** (n - a - b)
        out = out + term
    return ImplicitCurve(poly=out, domain="sphere")


# -- sphere arc functions -------------------------------------------------------


@dataclass(frozen=True)
class SphereArcFunction:
    """Nonnegative closed-form function vanishing exactly on a sphere arc.

    The arc is the piece of the circle (sphere intersect plane {u.n = d})
    on the side {u.m <= e}; with A(u) = u.n - d and B(u) = u.m - e the
    function is A^2 + (sqrt(A^2+B^2) + B)^2. It is analytic everywhere on
    the sphere except at the two arc endpoints {A = B = 0}, where the square
    root loses smoothness. Coefficients are exact rationals.
    """

    n: tuple
    d: Fraction
    m: tuple
    e: Fraction
    endpoints: tuple  # the two exceptional sphere points, exact

    def components(self, u) -> tuple[float, float]:
        a = float(u[0]) * float(self.n[0]) + float(u[1]) * float(self.n[1]) \
            + float(u[2]) * float(self.n[2]) - float(self.d)
        b = float(u[0]) * float(self.m[0]) + float(u[1]) * float(self.m[1]) \
            + float(u[2]) * float(self.m[2]) - float(self.e)
        return a, b

    def value(self, u) -> float:
        a, b = self.components(u)
        r = math.hypot(a, b)
        return a * a + (r + b) * (r + b)

    def gradient(self, u) -> tuple[float, float, float]:
        a, b = self.components(u)
        r = math.hypot(a, b)
        if r == 0.0:
            raise DomainError("arc function gradient at an endpoint")
        nf = tuple(float(c) for c in self.n)
        mf = tuple(float(c) for c in self.m)
        out = []
        for i in range(3):
            dr = (a * nf[i] + b * mf[i]) / r
            out.append(2.0 * a * nf[i] + 2.0 * (r + b) * (dr + mf[i]))
        return tuple(out)

    def value_exact(self, u, sq=None):
        """Exact rational value when sqrt(A^2+B^2) happens to be rational
        (endpoints and sanity checks); raises otherwise."""
        a = u[0] * self.n[0] + u[1] * self.n[1] + u[2] * self.n[2] - self.d
        b = u[0] * self.m[0] + u[1] * self.m[1] + u[2] * self.m[2] - self.e
        s2 = a * a + b * b
        if sq is None:
            root = _rational_sqrt(s2)
        else:
            if sq * sq != s2:
                raise ValueError("wrong square root hint")
            root = sq
        return a * a + (root + b) * (root + b)


def _rational_sqrt(q: Fraction) -> Fraction:
    q = Fraction(q)
    if q < 0:
        raise ValueError("negative radicand")
    num = math.isqrt(q.numerator)
    den = math.isqrt(q.denominator)
    if num * num != q.numerator or den * den != q.denominator:
        raise ValueError(f"{q} has no rational square root")
    return Fraction(num, den)


def _primitive_int_vector(vec) -> tuple[int, int, int]:
    fracs = [Fraction(v) for v in vec]
    lcm = 1
    for f in fracs:
        lcm = lcm * f.denominator // math.gcd(lcm, f.denominator)
    ints = [int(f * lcm) for f in fracs]
    g = 0
    for v in ints:
        g = math.gcd(g, abs(v))
    if g == 0:
        raise ValueError("zero vector")
    ints = [v // g for v in ints]
    for v in ints:
        if v:
            if v < 0:
                ints = [-w for w in ints]
            break
    return tuple(ints)


def _cross(a, b):
    return (
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    )


def sphere_arc(q1, q2, q3) -> SphereArcFunction:
    """Arc function through rational sphere points q1 -> q2 passing q3.

    q1 and q2 are the endpoints; q3 is any interior point of the intended arc
    (it selects which of the two circle arcs is the zero set). All inputs must
    be exact rational points on the unit sphere.
    """
    q1 = tuple(Fraction(v) for v in q1)
    q2 = tuple(Fraction(v) for v in q2)
    q3 = tuple(Fraction(v) for v in q3)
    for q in (q1, q2, q3):
        if q[0] ** 2 + q[1] ** 2 + q[2] ** 2 != 1:
            raise ValueError(f"{q} is not on the unit sphere")
    if len({q1, q2, q3}) != 3:
        raise ValueError("arc points must be pairwise distinct")
    chord = tuple(q2[i] - q1[i] for i in range(3))
    other = tuple(q3[i] - q1[i] for i in range(3))
    normal = _cross(chord, other)
    if not any(normal):
        raise ValueError("arc points are collinear, no unique circle plane")
    n = _primitive_int_vector(normal)
    d = sum(n[i] * q1[i] for i in range(3))
    m_raw = _cross(n, chord)
    m = _primitive_int_vector(m_raw)
    e = sum(m[i] * q1[i] for i in range(3))
    b3 = sum(m[i] * q3[i] for i in range(3)) - e
    if b3 == 0:
        raise ValueError("interior point lies on the chord plane")
    if b3 > 0:
        m = tuple(-v for v in m)
        e = -e
    return SphereArcFunction(n=n, d=d, m=m, e=e, endpoints=(q1, q2))


def segment_sphere_function() -> SphereArcFunction:
    """The canonical meridian-arc function y^2 + (sqrt(z^2+y^2) + z)^2.

    Its zero set on the sphere is {y = 0, z <= 0}; it is analytic off the two
    endpoints (+-1, 0, 0); the plane shadow of the zero set is the open
    segment (-1,1) x {0}.
    """
    return SphereArcFunction(
        n=(0, 1, 0),
        d=Fraction(0),
        m=(0, 0, 1),
        e=Fraction(0),
        endpoints=((Fraction(1), Fraction(0), Fraction(0)),
                   (Fraction(-1), Fraction(0), Fraction(0))),
    )

"""Curve layer tests: parametrization, implicitization, segments, arcs, lifts."""
import math
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from shrubfield.curves import (
    AffineMap,
    DomainError,
    HypocycloidSpec,
    ImplicitCurve,
    SegmentSpec,
    apply_affine,
    axis_cusps,
    cusp_angles,
    cusps,
    implicit_metadata,
    implicitize,
    lift_to_sphere,
    normalized_residual,
    param_point,
    param_velocity,
    plane_to_sphere,
    segment_sphere_function,
    sphere_arc,
    sphere_to_plane,
)
from shrubfield.poly_core import Polynomial, poly_exact_div

V2 = ("x", "y")
X = Polynomial.variable("x", V2)
Y = Polynomial.variable("y", V2)


# -- parametric form ----------------------------------------------------------


def test_param_point_quarter_turn():
    x, y = param_point(4, math.pi / 4)
    assert x == pytest.approx(math.sqrt(2), abs=1e-14)
    assert y == pytest.approx(math.sqrt(2), abs=1e-14)


def test_param_point_at_zero_is_first_cusp():
    for k in range(3, 9):
        x, y = param_point(k, 0.0)
        assert (x, y) == (k, 0.0)


def test_cusps_on_circle_of_radius_k():
    for k in range(3, 9):
        pts = cusps(k)
        assert len(pts) == k
        for x, y in pts:
            assert math.hypot(x, y) == pytest.approx(k, abs=1e-12)
        # cusps are actual curve points at the cusp angles
        for a, (x, y) in zip(cusp_angles(k), pts):
            px, py = param_point(k, a)
            assert (px, py) == pytest.approx((x, y), abs=1e-12)


def test_even_k_cusps_come_in_opposed_pairs():
    for k in (4, 6, 8):
        pts = cusps(k)
        for j in range(k // 2):
            ox, oy = pts[j + k // 2]
            assert (-pts[j][0], -pts[j][1]) == pytest.approx((ox, oy), abs=1e-12)


def test_axis_cusps_exact():
    assert axis_cusps(8) == [
        (Fraction(8), Fraction(0)),
        (Fraction(0), Fraction(8)),
        (Fraction(-8), Fraction(0)),
        (Fraction(0), Fraction(-8)),
    ]
    with pytest.raises(ValueError):
        axis_cusps(6)


def test_velocity_vanishes_only_at_cusps():
    # |velocity|^2 = (k-1)^2 * (2 - 2cos(k theta)) up to rounding, so the
    # zeros on [0, 2pi) are exactly the cusp angles.
    for k in (3, 5, 8):
        n = k - 1
        for i in range(200):
            th = 2 * math.pi * i / 200
            vx, vy = param_velocity(k, th)
            speed2 = vx * vx + vy * vy
            expected = n * n * (2 - 2 * math.cos(k * th))
            assert speed2 == pytest.approx(expected, abs=1e-9)
        for a in cusp_angles(k):
            vx, vy = param_velocity(k, a)
            assert math.hypot(vx, vy) < 1e-12


def test_param_rejects_small_k():
    with pytest.raises(ValueError):
        param_point(2, 0.0)
    with pytest.raises(ValueError):
        cusps(1)


# -- implicitization -----------------------------------------------------------


def test_astroid_matches_classical_form_exactly():
    # Independent oracle: the classical degree-6 astroid polynomial scaled to
    # cusp radius 4. The resultant construction must reproduce its square up
    # to the integer content 4096 = 2^12, as an exact polynomial identity.
    classical = (X * X + Y * Y - 16) ** 3 + 432 * X * X * Y * Y
    f4 = implicitize(4).poly
    assert poly_exact_div(f4, classical * classical) == Polynomial.constant(
        4096, V2
    )


def test_implicit_zero_at_cusp_and_nonzero_at_origin():
    f3 = implicitize(3).poly
    assert f3.evaluate((Fraction(3), Fraction(0))) == 0
    assert f3.evaluate((Fraction(0), Fraction(0))) != 0
    for k in range(3, 9):
        assert implicitize(k).poly.evaluate((Fraction(0), Fraction(0))) != 0


def test_implicit_nonnegative_everywhere_sampled():
    f5 = implicitize(5).poly
    for i in range(-6, 7, 3):
        for j in range(-6, 7, 3):
            assert float(f5.evaluate((float(i), float(j)))) >= 0.0


def test_parametric_residual_small():
    for k in range(3, 9):
        f = implicitize(k).poly
        worst = 0.0
        for i in range(100):
            th = 2 * math.pi * (i + 0.371) / 100
            worst = max(worst, normalized_residual(f, param_point(k, th)))
        assert worst < 1e-12


def test_gradient_vanishes_at_cusps():
    for k in range(3, 9):
        f = implicitize(k).poly
        gx, gy = f.diff("x"), f.diff("y")
        for c in cusps(k):
            assert normalized_residual(gx, c) < 1e-8
            assert normalized_residual(gy, c) < 1e-8


def test_implicit_metadata_content_doubles_per_cusp():
    for k in range(3, 7):
        md = implicit_metadata(k)
        assert md["integer_content"] == 2 ** (4 * k - 4)
        assert md["degree"] == 4 * (k - 1)


def test_exact_grid_zero_classification_matches_classical():
    # Coarse exact-rational preview of the acceptance grid: same zero/nonzero
    # classification as the classical astroid form at every point.
    classical = (X * X + Y * Y - 16) ** 3 + 432 * X * X * Y * Y
    f4 = implicitize(4).poly
    for i in range(21):
        for j in range(21):
            p = (Fraction(-5) + Fraction(i, 2), Fraction(-5) + Fraction(j, 2))
            assert (f4.evaluate(p) == 0) == (classical.evaluate(p) == 0)


def test_implicitize_rejects_small_k():
    with pytest.raises(ValueError):
        implicitize(2)


# -- affine maps ---------------------------------------------------------------


def test_affine_inverse_roundtrip():
    m = AffineMap.from_columns((2, 1), (0, 3), offset=(Fraction(1, 2), -4))
    inv = m.inverse()
    for p in [(0, 0), (1, 0), (Fraction(3, 7), Fraction(-2, 5))]:
        q = m.apply((Fraction(p[0]), Fraction(p[1])))
        back = inv.apply(q)
        assert back == (Fraction(p[0]), Fraction(p[1]))


def test_singular_affine_rejected():
    m = AffineMap.from_columns((1, 2), (2, 4))
    with pytest.raises(ValueError):
        m.inverse()
    with pytest.raises(ValueError):
        HypocycloidSpec(k=4, affine=m)


def test_apply_affine_translation_moves_zero_set():
    f3 = implicitize(3)
    shift = AffineMap.from_columns((1, 0), (0, 1), offset=(2, -1))
    moved = apply_affine(f3, shift)
    # cusp (3,0) moves to (5,-1)
    assert moved.poly.evaluate((Fraction(5), Fraction(-1))) == 0
    assert moved.poly.evaluate((Fraction(3), Fraction(0))) != 0
    # parametric samples of the moved curve still sit on the zero set
    for i in range(25):
        th = 2 * math.pi * i / 25 + 0.13
        x, y = param_point(3, th)
        assert normalized_residual(moved.poly, (x + 2, y - 1)) < 1e-12


def test_apply_affine_identity_is_noop():
    f5 = implicitize(5)
    same = apply_affine(f5, AffineMap.identity())
    assert same.poly == f5.poly


def test_apply_affine_scaling():
    f4 = implicitize(4)
    half = AffineMap.from_columns((Fraction(1, 2), 0), (0, Fraction(1, 2)))
    small = apply_affine(f4, half)
    assert small.poly.evaluate((Fraction(2), Fraction(0))) == 0
    assert small.poly.evaluate((Fraction(4), Fraction(0))) != 0


def test_hypocycloid_spec_point_composes_affine():
    aff = AffineMap.from_columns((0, 1), (-1, 0), offset=(1, 1))  # rotate+shift
    spec = HypocycloidSpec(k=5, affine=aff)
    th = 0.77
    x, y = param_point(5, th)
    sx, sy = spec.point(th)
    assert (sx, sy) == pytest.approx((-y + 1, x + 1), abs=1e-12)


def test_segment_spec_validation_and_midpoint():
    s = SegmentSpec(start=(0, 0), end=(1, 2))
    assert s.midpoint() == (Fraction(1, 2), Fraction(1))
    assert s.point(0.0) == (0.0, 0.0)
    assert s.point(1.0) == (1.0, 2.0)
    with pytest.raises(ValueError):
        SegmentSpec(start=(1, 1), end=(1, 1))


# -- stereographic transfer ------------------------------------------------------


@given(
    st.fractions(min_value=-50, max_value=50, max_denominator=40),
    st.fractions(min_value=-50, max_value=50, max_denominator=40),
)
@settings(max_examples=60, deadline=None)
def test_plane_sphere_roundtrip_exact(u, v):
    x, y, z = plane_to_sphere((u, v))
    assert x * x + y * y + z * z == 1
    assert z != 1
    assert sphere_to_plane((x, y, z)) == (u, v)


def test_plane_to_sphere_known_points():
    assert plane_to_sphere((Fraction(0), Fraction(0))) == (0, 0, -1)
    assert plane_to_sphere((Fraction(1), Fraction(0))) == (1, 0, 0)
    x, y, z = plane_to_sphere((Fraction(2), Fraction(0)))
    assert (x, y, z) == (Fraction(4, 5), 0, Fraction(3, 5))


def test_sphere_to_plane_rejects_north_pole():
    with pytest.raises(DomainError):
        sphere_to_plane((0, 0, 1))


def test_lift_examples():
    # x lifts to x with clearing exponent 1
    lifted = lift_to_sphere(X, 1)
    assert lifted.poly == Polynomial.variable("x", ("x", "y", "z"))
    # a constant lifts to c*(1-z)
    lifted = lift_to_sphere(Polynomial.constant(3, V2), 1)
    assert lifted.poly == Polynomial.from_text("3 + -3*z", ("x", "y", "z"))
    # the unit circle lifts to x^2 + y^2 - (1-z)^2
    circle = X * X + Y * Y - 1
    lifted = lift_to_sphere(circle, 2)
    expected = Polynomial.from_text(
        "1*x^2 + 1*y^2 + -1*z^2 + 2*z + -1", ("x", "y", "z")
    )
    assert lifted.poly == expected


def test_lift_agrees_with_chart_composition_exactly():
    p = (X - 1) * (Y + 2) * X + 5
    n = p.total_degree() + 1
    q = lift_to_sphere(p, n).poly
    for w in [(Fraction(1, 3), Fraction(-2, 7)), (Fraction(0), Fraction(4))]:
        u = plane_to_sphere(w)
        lhs = q.evaluate(u)
        rhs = (1 - u[2]) ** n * p.evaluate(w)
        assert lhs == rhs


def test_lift_vanishes_at_north_pole():
    p = X * Y - 3
    q = lift_to_sphere(p, 3).poly
    assert q.evaluate((Fraction(0), Fraction(0), Fraction(1))) == 0


def test_lift_rejects_low_exponent():
    with pytest.raises(ValueError):
        lift_to_sphere(X * X + Y, 1)


# -- segment and arc functions ----------------------------------------------------


def test_segment_function_reference_values():
    seg = segment_sphere_function()
    assert seg.value((0.0, 0.0, -1.0)) == 0.0
    assert seg.value((0.0, 0.0, 1.0)) == 4.0
    assert seg.value((0.0, 1.0, 0.0)) == 2.0


def test_segment_function_zero_set_is_lower_meridian():
    seg = segment_sphere_function()
    for i in range(1, 40):
        th = math.pi * i / 40  # lower half: z = -sin(th) <= 0
        u = (math.cos(th), 0.0, -math.sin(th))
        assert seg.value(u) < 1e-28
        v = (math.cos(th), 0.0, math.sin(th))  # upper mirror
        assert seg.value(v) > 1e-6
    off = (0.1, 0.2, -math.sqrt(1 - 0.05))
    assert seg.value(off) > 1e-3


def test_segment_gradient_matches_finite_differences():
    seg = segment_sphere_function()
    h = 1e-6
    for u in [(0.3, 0.5, -0.6), (0.0, 0.2, 0.9), (-0.4, -0.1, -0.5)]:
        g = seg.gradient(u)
        for i in range(3):
            up = list(u)
            dn = list(u)
            up[i] += h
            dn[i] -= h
            fd = (seg.value(up) - seg.value(dn)) / (2 * h)
            assert g[i] == pytest.approx(fd, rel=1e-5, abs=1e-8)


def test_segment_gradient_rejects_endpoints():
    seg = segment_sphere_function()
    with pytest.raises(DomainError):
        seg.gradient((1.0, 0.0, 0.0))
    with pytest.raises(DomainError):
        seg.gradient((-1.0, 0.0, 0.0))


def test_canonical_arc_reproduces_segment_function():
    arc = sphere_arc((1, 0, 0), (-1, 0, 0), (0, 0, -1))
    assert arc.n == (0, 1, 0)
    assert arc.d == 0
    assert arc.m == (0, 0, 1)
    assert arc.e == 0
    seg = segment_sphere_function()
    for u in [(0.3, 0.5, -0.6), (0.0, 0.0, 1.0), (0.0, 1.0, 0.0)]:
        assert arc.value(u) == seg.value(u)


def test_quarter_arc_zero_set():
    # quarter of the equator from (1,0,0) to (0,1,0) through (3/5, 4/5, 0)
    arc = sphere_arc((1, 0, 0), (0, 1, 0), (Fraction(3, 5), Fraction(4, 5), 0))
    for i in range(1, 30):
        th = (math.pi / 2) * i / 30
        on = (math.cos(th), math.sin(th), 0.0)
        assert arc.value(on) < 1e-28
    # the complementary three quarters stay positive
    for th in (2.0, 3.0, 4.5, 5.5):
        off = (math.cos(th), math.sin(th), 0.0)
        assert arc.value(off) > 1e-3
    # off the circle plane it is positive as well
    assert arc.value((0.6, 0.64, math.sqrt(1 - 0.36 - 0.4096))) > 1e-4
    # endpoints are the exceptional points
    with pytest.raises(DomainError):
        arc.gradient((1.0, 0.0, 0.0))


def test_arc_endpoints_exact_zeros():
    arc = sphere_arc(
        (0, 0, 1),
        (Fraction(4, 5), 0, Fraction(3, 5)),
        (Fraction(3, 5), 0, Fraction(4, 5)),
    )
    for q in arc.endpoints:
        assert arc.value_exact(q) == 0


def test_arc_rejects_bad_inputs():
    with pytest.raises(ValueError):
        sphere_arc((1, 0, 0), (1, 0, 0), (0, 1, 0))  # repeated point
    with pytest.raises(ValueError):
        sphere_arc((1, 0, 0), (0, 1, 0), (Fraction(1, 2), 0, 0))  # off sphere


def test_implicit_curve_validation():
    with pytest.raises(ValueError):
        ImplicitCurve(poly=Polynomial.zero(V2), domain="plane")
    with pytest.raises(ValueError):
        ImplicitCurve(poly=X, domain="orbit")
    with pytest.raises(ValueError):
        ImplicitCurve(poly=X, domain="sphere")  # wrong variable tuple

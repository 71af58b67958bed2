"""Tangent vector fields on the sphere from squared boundary functions.

A shrub layout hands us a collection of plane curves and segments. Each one
becomes a factor: placed leaf boundaries give polynomials (lifted to the
sphere through the stereographic chart), segments give closed-form arc
functions. The product F of all factors vanishes exactly on the realized
boundary, and the induced field is built from G = F^2 so that the zero set
consists of degenerate rest points that orbits accumulate on without
reaching.

Factor coefficients stay exact rationals end to end; only evaluation is
floating point, through small compiled coefficient tables.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .curves import (
    SPHERE_VARS,
    DomainError,
    SphereArcFunction,
    apply_affine,
    implicitize,
    lift_to_sphere,
    plane_to_sphere,
    sphere_arc,
)
from .poly_core import (
    Polynomial,
    format_rational,
    parse_point,
    parse_rational,
    rational_point,
)
from .shrub_model import (
    Attachment,
    Junction,
    LeafPlacement,
    Piece,
    ShrubGraph,
    ShrubLayout,
    layout_shrub,
)

UNIT_NORM_TOLERANCE = 1e-12


class _NumericPoly:
    """Float coefficient table for fast polynomial evaluation.

    Keeps exponent rows and coefficients as arrays; evaluation is a single
    broadcasted power-product per point batch.
    """

    __slots__ = ("exps", "coeffs", "nvars")

    def __init__(self, poly: Polynomial):
        items = sorted(poly.terms.items())
        self.nvars = len(poly.variables)
        if items:
            self.exps = np.array([e for e, _ in items], dtype=np.int64)
            self.coeffs = np.array([float(c) for _, c in items])
        else:
            self.exps = np.zeros((0, self.nvars), dtype=np.int64)
            self.coeffs = np.zeros(0)

    def value(self, pts: np.ndarray) -> np.ndarray:
        """Evaluate at an (m, nvars) float array; returns shape (m,)."""
        if not len(self.coeffs):
            return np.zeros(pts.shape[0])
        mono = np.prod(pts[:, None, :] ** self.exps[None, :, :], axis=2)
        return mono @ self.coeffs


class PolyFactor:
    """Polynomial factor of the boundary function, in sphere coordinates.

    `source`, when present, records the parametric origin of the factor's
    zero curve (the equator, or a hypocycloid with its exact affine map) so
    the zero set can be sampled without re-deriving it from coefficients.
    """

    kind = "poly"

    def __init__(self, poly: Polynomial, label: str = "", source: dict = None):
        if poly.variables != SPHERE_VARS:
            raise ValueError("factor polynomial must use sphere variables")
        if not poly:
            raise ValueError("zero polynomial cannot be a factor")
        self.poly = poly
        self.label = label
        self.source = dict(source) if source else None
        self._val = _NumericPoly(poly)
        self._grad = tuple(_NumericPoly(poly.diff(v)) for v in SPHERE_VARS)

    @property
    def exceptional_points(self) -> tuple:
        return ()

    def value_many(self, pts: np.ndarray) -> np.ndarray:
        return self._val.value(pts)

    def gradient_many(self, pts: np.ndarray) -> np.ndarray:
        return np.stack([g.value(pts) for g in self._grad], axis=1)

    def value(self, u) -> float:
        return float(self._val.value(np.asarray(u, dtype=float)[None, :])[0])

    def gradient(self, u) -> np.ndarray:
        return self.gradient_many(np.asarray(u, dtype=float)[None, :])[0]

    def value_exact(self, point):
        return self.poly.evaluate(tuple(Fraction(c) for c in point))


class ArcFactor:
    """Arc-function factor; analytic except at the two arc endpoints."""

    kind = "arc"

    def __init__(self, arc: SphereArcFunction, label: str = ""):
        self.arc = arc
        self.label = label
        self._n = np.array([float(c) for c in arc.n])
        self._d = float(arc.d)
        self._m = np.array([float(c) for c in arc.m])
        self._e = float(arc.e)

    @property
    def exceptional_points(self) -> tuple:
        return self.arc.endpoints

    def value_many(self, pts: np.ndarray) -> np.ndarray:
        a = pts @ self._n - self._d
        b = pts @ self._m - self._e
        r = np.hypot(a, b)
        return a * a + (r + b) ** 2

    def gradient_many(self, pts: np.ndarray) -> np.ndarray:
        a = pts @ self._n - self._d
        b = pts @ self._m - self._e
        r = np.hypot(a, b)
        if np.any(r == 0.0):
            raise DomainError("arc factor gradient at an endpoint")
        dr = (a[:, None] * self._n + b[:, None] * self._m) / r[:, None]
        return 2.0 * a[:, None] * self._n + 2.0 * (r + b)[:, None] * (
            dr + self._m
        )

    def value(self, u) -> float:
        return self.arc.value(u)

    def gradient(self, u) -> np.ndarray:
        return np.array(self.arc.gradient(u))

    def value_exact(self, point):
        return self.arc.value_exact(tuple(Fraction(c) for c in point))


class SphereFunction:
    """Product of boundary factors, with its punctures and provenance-free
    metadata. An empty product is the constant 1."""

    def __init__(self, factors=(), punctures=(), metadata=None):
        self.factors = tuple(factors)
        self.punctures = tuple(
            tuple(Fraction(c) for c in p) for p in punctures
        )
        self.metadata = dict(metadata or {})

    def exceptional_points(self) -> tuple:
        out = []
        for factor in self.factors:
            for p in factor.exceptional_points:
                if p not in out:
                    out.append(p)
        return tuple(out)

    def value(self, u) -> float:
        out = 1.0
        for factor in self.factors:
            out *= factor.value(u)
        return out

    def value_exact(self, point):
        """Exact rational product; raises ValueError when an arc factor's
        square root is irrational at the point."""
        out = Fraction(1)
        for factor in self.factors:
            out *= factor.value_exact(point)
        return out

    def value_many(self, pts: np.ndarray) -> np.ndarray:
        out = np.ones(pts.shape[0])
        for factor in self.factors:
            out *= factor.value_many(pts)
        return out

    def value_and_gradient(self, u) -> tuple[float, np.ndarray]:
        v, g = self.value_and_gradient_many(np.asarray(u, dtype=float)[None, :])
        return float(v[0]), g[0]

    def gradient(self, u) -> np.ndarray:
        return self.value_and_gradient(u)[1]

    def value_and_gradient_many(
        self, pts: np.ndarray
    ) -> tuple[np.ndarray, np.ndarray]:
        """Product and its gradient by the product rule.

        Partial products are accumulated from both ends so a factor with a
        zero value never forces a division.
        """
        m = pts.shape[0]
        n = len(self.factors)
        if n == 0:
            return np.ones(m), np.zeros((m, 3))
        vals = [f.value_many(pts) for f in self.factors]
        grads = [f.gradient_many(pts) for f in self.factors]
        prefix = [np.ones(m)]
        for v in vals:
            prefix.append(prefix[-1] * v)
        suffix = [np.ones(m)]
        for v in reversed(vals):
            suffix.append(suffix[-1] * v)
        suffix.reverse()
        total = prefix[-1]
        grad = np.zeros((m, 3))
        for i in range(n):
            grad += (prefix[i] * suffix[i + 1])[:, None] * grads[i]
        return total, grad


# -- the induced tangent field ---------------------------------------------


class VectorField:
    """Tangent field on the unit sphere induced by a boundary function.

    With G = F^2 evaluated on radial projections, the components are

        f1 = 2z(y - x)G + (x^2 + y^2)(z dG/dy - y dG/dz)
        f2 = -2z(x + y)G + (x^2 + y^2)(x dG/dz - z dG/dx)
        f3 = (x^2 + y^2)(2G + y dG/dx - x dG/dy)

    where dG is the tangential gradient 2F(I - vv^T)grad F. Tangency
    u . f(u) = 0 is an identity of the formulas, independent of F.
    """

    def __init__(self, function: SphereFunction):
        self.function = function

    def g_value(self, u) -> float:
        """G = F^2 at the radial projection of u."""
        v = np.asarray(u, dtype=float)
        v = v / np.linalg.norm(v)
        value = self.function.value(v)
        return value * value

    def evaluate(self, u) -> np.ndarray:
        return self.evaluate_many(np.asarray(u, dtype=float)[None, :])[0]

    def evaluate_many(self, pts) -> np.ndarray:
        """Field vectors at an (m, 3) batch of unit points."""
        pts = np.asarray(pts, dtype=float)
        if pts.ndim != 2 or pts.shape[1] != 3:
            raise ValueError("expected an (m, 3) array of sphere points")
        norms = np.linalg.norm(pts, axis=1)
        if np.any(np.abs(norms - 1.0) > UNIT_NORM_TOLERANCE):
            worst = float(np.max(np.abs(norms - 1.0)))
            raise ValueError(
                f"field is defined on the unit sphere; |norm - 1| = {worst:.3e}"
            )
        v = pts / norms[:, None]
        fval, fgrad = self.function.value_and_gradient_many(v)
        radial = np.sum(v * fgrad, axis=1)
        gg = 2.0 * fval[:, None] * (fgrad - radial[:, None] * v)
        g = fval * fval
        x, y, z = v[:, 0], v[:, 1], v[:, 2]
        rho2 = x * x + y * y
        f1 = 2.0 * z * (y - x) * g + rho2 * (z * gg[:, 1] - y * gg[:, 2])
        f2 = -2.0 * z * (x + y) * g + rho2 * (x * gg[:, 2] - z * gg[:, 0])
        f3 = rho2 * (2.0 * g + y * gg[:, 0] - x * gg[:, 1])
        return np.stack([f1, f2, f3], axis=1)


def build_field(function: SphereFunction) -> VectorField:
    return VectorField(function)


def eval_field(field: VectorField, u) -> np.ndarray:
    """Single evaluation with the unit-norm guard."""
    return field.evaluate(u)


# -- rest point at the bottom of the sphere ---------------------------------


@dataclass(frozen=True)
class SouthPoleFocus:
    """Finite-difference linearization at the south pole.

    The eigenvalue pair of the chart Jacobian is compared against the
    closed-form prediction 2*G(south) * (1 +- i); a relative mismatch
    above ~1e-4 indicates a broken field, not difference noise.
    """

    jacobian: np.ndarray
    eigenvalues: tuple
    predicted: tuple
    g_south: float
    relative_error: float


def jacobian_at_south_pole(field: VectorField, h: float = 1e-5) -> SouthPoleFocus:
    """Central-difference Jacobian in the chart that sends the south pole
    to the origin, with its eigenvalues and the spiral-focus prediction."""
    south = (Fraction(0), Fraction(0), Fraction(-1))
    try:
        f_south = float(field.function.value_exact(south))
    except ValueError:
        f_south = field.function.value((0.0, 0.0, -1.0))
    if f_south == 0.0:
        raise ValueError(
            "boundary function vanishes at the south pole; "
            "the focus prediction needs a nonzero value there"
        )
    g_south = f_south * f_south

    def chart_field(a: float, b: float) -> np.ndarray:
        s = a * a + b * b
        d = 1.0 + s
        p = np.array([2.0 * a / d, 2.0 * b / d, (s - 1.0) / d])
        f = field.evaluate(p)
        w = 1.0 - p[2]
        return np.array(
            [f[0] / w + p[0] * f[2] / (w * w), f[1] / w + p[1] * f[2] / (w * w)]
        )

    col0 = (chart_field(h, 0.0) - chart_field(-h, 0.0)) / (2.0 * h)
    col1 = (chart_field(0.0, h) - chart_field(0.0, -h)) / (2.0 * h)
    jac = np.column_stack([col0, col1])
    eig = sorted(np.linalg.eigvals(jac), key=lambda t: (t.imag, t.real))
    predicted = sorted(
        [2.0 * g_south * (1 - 1j), 2.0 * g_south * (1 + 1j)],
        key=lambda t: (t.imag, t.real),
    )
    rel = max(
        abs(e - p) / abs(p) for e, p in zip(eig, predicted)
    )
    return SouthPoleFocus(
        jacobian=jac,
        eigenvalues=tuple(eig),
        predicted=tuple(predicted),
        g_south=g_south,
        relative_error=float(rel),
    )


# -- composing the boundary function from a layout ---------------------------


def _chart_image(point) -> tuple:
    """Sphere image of a layout point; None (the bud at infinity) goes to
    the top of the sphere."""
    if point is None:
        return (Fraction(0), Fraction(0), Fraction(1))
    return tuple(plane_to_sphere((Fraction(point[0]), Fraction(point[1]))))


def _segment_interior_point(segment) -> tuple:
    """A finite plane point strictly inside a maximal segment or ray."""
    if segment.start is None:
        return (Fraction(segment.end[0]) + 1, Fraction(segment.end[1]))
    if segment.end is None:
        return (Fraction(segment.start[0]) + 1, Fraction(segment.start[1]))
    return (
        (Fraction(segment.start[0]) + Fraction(segment.end[0])) / 2,
        (Fraction(segment.start[1]) + Fraction(segment.end[1])) / 2,
    )


def _leaf_boundary_poly(placement: LeafPlacement) -> Polynomial:
    curve = apply_affine(implicitize(placement.k_layout), placement.affine)
    return curve.poly


def _leaf_source(placement: LeafPlacement) -> dict:
    # exact rationals as strings, so bundles round-trip byte for byte
    return {
        "piece": "hypocycloid",
        "k": placement.k_layout,
        "matrix": [rational_point(row) for row in placement.affine.matrix],
        "offset": rational_point(placement.affine.offset),
    }


def _compose_frame(layout: ShrubLayout) -> SphereFunction:
    factors = [
        PolyFactor(
            Polynomial.variable("z", SPHERE_VARS),
            label="frame",
            source={"piece": "equator"},
        )
    ]
    for pid in sorted(layout.placements):
        placement = layout.placements[pid]
        if not isinstance(placement, LeafPlacement) or placement.frame:
            continue
        poly = _leaf_boundary_poly(placement)
        at_origin = poly.evaluate((Fraction(0), Fraction(0)))
        if at_origin == 0:
            raise AssertionError(
                "placed leaf boundary passes through the chart origin"
            )
        lifted = lift_to_sphere(poly, poly.total_degree())
        factors.append(
            PolyFactor(
                lifted.poly, label=f"leaf:{pid}", source=_leaf_source(placement)
            )
        )
    return SphereFunction(
        factors=factors,
        punctures=(),
        metadata={"mode": "frame", "frame_piece": layout.frame_piece},
    )


def _compose_punctured(layout: ShrubLayout) -> SphereFunction:
    if layout.junction_points[layout.base_bud] is not None:
        raise AssertionError("layout base bud is not at infinity")
    factors = []
    for pid in sorted(layout.placements):
        placement = layout.placements[pid]
        if not isinstance(placement, LeafPlacement):
            continue
        poly = _leaf_boundary_poly(placement)
        if poly.evaluate((Fraction(0), Fraction(0))) == 0:
            raise AssertionError(
                "placed leaf boundary passes through the chart origin"
            )
        lifted = lift_to_sphere(poly, poly.total_degree())
        factors.append(
            PolyFactor(
                lifted.poly, label=f"leaf:{pid}", source=_leaf_source(placement)
            )
        )
    for index, segment in enumerate(layout.maximal_segments):
        arc = sphere_arc(
            _chart_image(segment.start),
            _chart_image(segment.end),
            _chart_image(_segment_interior_point(segment)),
        )
        factors.append(ArcFactor(arc, label=f"segment:{index}"))
    punctures = tuple(
        _chart_image(layout.junction_points[bud]) for bud in layout.punctures
    )
    return SphereFunction(
        factors=factors,
        punctures=punctures,
        metadata={"mode": "punctured", "base_bud": layout.base_bud},
    )


def compose_shrub_function(layout: ShrubLayout) -> SphereFunction:
    """Boundary function for a drawn shrub.

    Frame layouts give a plain z factor (the outer disk boundary is the
    equator) plus one lifted polynomial per inner leaf. Punctured layouts
    lift every placed leaf curve directly and add one circular-arc factor
    per maximal segment; segments reaching the bud at infinity close up at
    the top of the sphere, and the punctures are the images of the
    non-analytic buds.
    """
    if layout.mode == "frame":
        return _compose_frame(layout)
    if layout.mode == "punctured":
        return _compose_punctured(layout)
    raise ValueError(f"unknown layout mode {layout.mode!r}")


def synthesize_field(shrub: ShrubGraph) -> VectorField:
    """Layout, compose, and build in one step."""
    return build_field(compose_shrub_function(layout_shrub(shrub)))


# -- small reference shrubs ---------------------------------------------------


def example_shrubs() -> dict[str, ShrubGraph]:
    """Named small shrubs that exercise both layout modes.

    equator      lone leaf; the realized boundary is the equator circle
    framed-pair  two leaves joined at a cusp, drawn as disk-in-frame
    framed-chain three leaves in a row, still a pure cactus
    lone-sprig   a single segment with two free ends
    spiked-leaf  a leaf with sprigs on two opposed cusps
    """
    leaf = lambda: Piece("leaf", k=4)  # noqa: E731
    sprig = lambda: Piece("sprig")  # noqa: E731
    out = {}
    out["equator"] = ShrubGraph((leaf(),), ())
    out["framed-pair"] = ShrubGraph(
        (leaf(), leaf()),
        (Junction(0, (Attachment(0, 0), Attachment(1, 0))),),
    )
    out["framed-chain"] = ShrubGraph(
        (leaf(), leaf(), leaf()),
        (
            Junction(0, (Attachment(0, 0), Attachment(1, 0))),
            Junction(1, (Attachment(1, 2), Attachment(2, 0))),
        ),
    )
    out["lone-sprig"] = ShrubGraph((sprig(),), ())
    out["spiked-leaf"] = ShrubGraph(
        (leaf(), sprig(), sprig()),
        (
            Junction(0, (Attachment(0, 0), Attachment(1, "end0"))),
            Junction(1, (Attachment(0, 2), Attachment(2, "end0"))),
        ),
    )
    return out


def example_field(name: str) -> VectorField:
    shrubs = example_shrubs()
    if name not in shrubs:
        known = ", ".join(sorted(shrubs))
        raise KeyError(f"unknown example {name!r}; known: {known}")
    return synthesize_field(shrubs[name])


# -- serialized bundles -------------------------------------------------------


BUNDLE_FORMAT = "field-bundle/1"


def bundle_dict(function: SphereFunction) -> dict:
    """JSON-ready description of a boundary function; exact and stable."""
    factors = []
    for factor in function.factors:
        if isinstance(factor, PolyFactor):
            entry = {
                "kind": "poly",
                "label": factor.label,
                "poly": factor.poly.to_text(),
            }
            if factor.source is not None:
                entry["source"] = factor.source
            factors.append(entry)
        elif isinstance(factor, ArcFactor):
            arc = factor.arc
            factors.append(
                {
                    "kind": "arc",
                    "label": factor.label,
                    "circle_normal": [int(c) for c in arc.n],
                    "circle_offset": format_rational(arc.d),
                    "side_normal": [int(c) for c in arc.m],
                    "side_offset": format_rational(arc.e),
                    "endpoints": [rational_point(p) for p in arc.endpoints],
                }
            )
        else:
            raise TypeError(f"cannot serialize factor {factor!r}")
    return {
        "format": BUNDLE_FORMAT,
        "metadata": dict(function.metadata),
        "factors": factors,
        "punctures": [rational_point(p) for p in function.punctures],
    }


def bundle_text(function: SphereFunction) -> str:
    return json.dumps(bundle_dict(function), sort_keys=True, indent=2) + "\n"


def save_bundle(path, function: SphereFunction) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        handle.write(bundle_text(function))


def function_from_bundle(data: dict) -> SphereFunction:
    if data.get("format") != BUNDLE_FORMAT:
        raise ValueError(f"not a {BUNDLE_FORMAT} bundle")
    factors = []
    for item in data["factors"]:
        if item["kind"] == "poly":
            factors.append(
                PolyFactor(
                    Polynomial.from_text(item["poly"], SPHERE_VARS),
                    label=item.get("label", ""),
                    source=item.get("source"),
                )
            )
        elif item["kind"] == "arc":
            arc = SphereArcFunction(
                n=tuple(int(c) for c in item["circle_normal"]),
                d=parse_rational(item["circle_offset"]),
                m=tuple(int(c) for c in item["side_normal"]),
                e=parse_rational(item["side_offset"]),
                endpoints=tuple(parse_point(p) for p in item["endpoints"]),
            )
            factors.append(ArcFactor(arc, label=item.get("label", "")))
        else:
            raise ValueError(f"unknown factor kind {item['kind']!r}")
    return SphereFunction(
        factors=factors,
        punctures=tuple(parse_point(p) for p in data.get("punctures", ())),
        metadata=data.get("metadata", {}),
    )


def load_bundle(path) -> SphereFunction:
    with open(path, "r", encoding="utf-8") as handle:
        data = json.load(handle)
    return function_from_bundle(data)

"""Command line driver for the whole pipeline.

Five commands cover the pipeline end to end:

    implicitize   exact implicit polynomial of a k-cusped hypocycloid
    classify      structural report for a shrub description file
    synthesize    layout a shrub and emit a tangent field bundle
    simulate      integrate an orbit and estimate its limit set
    report        render a report file as readable text

Every command is deterministic given its inputs: reports embed the resolved
parameter set together with its SHA-256 hash, repeated runs with identical
configuration produce byte-identical files, and nothing records wall-clock
time or machine identity.

Configuration comes from an optional single JSON file (``--config``) holding
one object per command name, e.g. ``{"simulate": {"horizon": 40.0}}``.
Command-line flags override file values, which override built-in defaults.
Unknown keys in a command's section are rejected.

Exit codes are stable: 0 success, 2 validation or configuration failure
(bad flags, malformed files, unsatisfiable layouts), 3 numeric failure
(step underflow, exhausted step budgets, evaluation at exceptional points).
"""

from __future__ import annotations

import hashlib
import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from fractions import Fraction

import click
import numpy as np

from . import curves, field_synth, flow_sim, shrub_model
from .poly_core import Polynomial

PLANE_VARS = ("x", "y")
CURVE_FORMAT = "implicit-curve/1"


class ConfigurationError(click.ClickException):
    """Validation failure: bad input files, values, or unsatisfiable layouts."""

    exit_code = 2


class NumericFailureError(click.ClickException):
    """Numeric failure during integration or evaluation."""

    exit_code = 3


# -- configuration plumbing ----------------------------------------------------


def _dump_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=2) + "\n"


def _config_hash(resolved: dict) -> str:
    canonical = json.dumps(resolved, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


def _load_json_file(path, what: str):
    try:
        with open(path, "r", encoding="utf-8") as handle:
            return json.load(handle)
    except OSError as exc:
        raise ConfigurationError(f"cannot read {what} {path!r}: {exc}")
    except json.JSONDecodeError as exc:
        raise ConfigurationError(f"{what} {path!r} is not valid JSON: {exc}")


def _resolve_config(ctx: click.Context, managed: tuple) -> dict:
    """Merge defaults, the command's config-file section, and explicit flags.

    `managed` lists the parameter names owned by the configuration system;
    the returned dict maps each to its effective value and is what gets
    hashed into reports.
    """
    command = ctx.command.name
    resolved = {name: ctx.params[name] for name in managed}
    config_path = ctx.params.get("config")
    if config_path is not None:
        data = _load_json_file(config_path, "config file")
        if not isinstance(data, dict):
            raise ConfigurationError("config file must hold a JSON object")
        section = data.get(command, {})
        if not isinstance(section, dict):
            raise ConfigurationError(
                f"config section {command!r} must be a JSON object"
            )
        unknown = sorted(set(section) - set(managed))
        if unknown:
            raise ConfigurationError(
                f"unknown config key(s) in section {command!r}: "
                + ", ".join(unknown)
            )
        from click.core import ParameterSource

        for name, value in section.items():
            if ctx.get_parameter_source(name) != ParameterSource.COMMANDLINE:
                resolved[name] = value
    resolved["command"] = command
    return resolved


def _require_writable(path, what: str) -> None:
    parent = os.path.dirname(os.path.abspath(path))
    if not os.path.isdir(parent) or not os.access(parent, os.W_OK):
        raise ConfigurationError(f"{what} path {path!r} is not writable")


def _write_text(path, text: str, what: str) -> None:
    _require_writable(path, what)
    with open(path, "w", encoding="utf-8", newline="") as handle:
        handle.write(text)


def _emit_report(report: dict, report_path) -> None:
    text = _dump_json(report)
    if report_path is None:
        click.echo(text, nl=False)
    else:
        _write_text(report_path, text, "report")
        click.echo(f"report: {report_path}")


# -- command group --------------------------------------------------------------


@click.group()
def cli():
    """Hypocycloid boundary curves, shrub layouts, and sphere flows."""


_CONFIG_OPTION = click.option(
    "--config",
    type=click.Path(exists=True, dir_okay=False),
    default=None,
    help="JSON file with one settings object per command; flags override it.",
)


# -- implicitize -----------------------------------------------------------------


def _curve_file_dict(k: int) -> dict:
    curve = curves.implicitize(k)
    meta = curves.implicit_metadata(k)
    return {
        "format": CURVE_FORMAT,
        "k": k,
        "variables": list(PLANE_VARS),
        "degree": meta["degree"],
        "terms": meta["terms"],
        "integer_content": str(meta["integer_content"]),
        "polynomial": curve.poly.to_text(),
    }


def _classical_astroid() -> Polynomial:
    x = Polynomial.variable("x", PLANE_VARS)
    y = Polynomial.variable("y", PLANE_VARS)
    r2 = x * x + y * y
    c16 = Polynomial.constant(16, PLANE_VARS)
    c432 = Polynomial.constant(432, PLANE_VARS)
    return (r2 - c16) ** 3 + c432 * x * x * y * y


def _astroid_grid_check(poly: Polynomial) -> dict:
    """Exact zero-set comparison on the 101x101 tenth-step grid over [-5,5]^2.

    Both polynomials are evaluated in rational arithmetic, so "zero within
    tolerance" degenerates to exact equality and the comparison carries no
    floating-point slack at all.
    """
    classical = _classical_astroid()
    mismatches = []
    shared_zeros = 0
    for i in range(-50, 51):
        for j in range(-50, 51):
            point = (Fraction(i, 10), Fraction(j, 10))
            ours = poly.evaluate(point) == 0
            reference = classical.evaluate(point) == 0
            if ours != reference:
                mismatches.append([float(point[0]), float(point[1])])
            elif ours:
                shared_zeros += 1
    return {
        "grid": 101,
        "span": [-5.0, 5.0],
        "points": 101 * 101,
        "agreements": 101 * 101 - len(mismatches),
        "mismatches": mismatches,
        "shared_zeros": shared_zeros,
        "exact": True,
    }


@cli.command("implicitize")
@click.option("--k", type=int, required=True, help="Cusp count, at least 3.")
@click.option(
    "--out",
    type=click.Path(dir_okay=False),
    default=None,
    help="Curve file destination (default hypocycloid-k<k>.curve.json).",
)
@click.option(
    "--samples",
    type=int,
    default=1000,
    show_default=True,
    help="Parameter samples for the residual sweep.",
)
@click.option(
    "--check",
    type=click.Choice(["astroid"]),
    default=None,
    help="Compare the k=4 zero set against the classical astroid form.",
)
@click.option("--report", type=click.Path(dir_okay=False), default=None)
@_CONFIG_OPTION
@click.pass_context
def implicitize_command(ctx, k, out, samples, check, report, config):
    """Write the exact implicit polynomial of the k-cusped hypocycloid.

    The residual report sweeps the parametric curve and records the largest
    normalized value of the polynomial along it, plus the normalized gradient
    at every cusp and a nonvanishing check at the origin.
    """
    cfg = _resolve_config(ctx, ("k", "out", "samples", "check", "report"))
    k = cfg["k"]
    samples = cfg["samples"]
    check = cfg["check"]
    out = cfg["out"]
    report = cfg["report"]
    if not isinstance(k, int) or k < 3:
        raise click.BadParameter("cusp count must be at least 3", param_hint="--k")
    if not isinstance(samples, int) or samples < 1:
        raise click.BadParameter("need at least one sample", param_hint="--samples")
    if check is not None and k != 4:
        raise click.BadParameter(
            "the classical comparison form is the four-cusp astroid; use --k 4",
            param_hint="--check",
        )
    if out is None:
        out = f"hypocycloid-k{k}.curve.json"
        cfg["out"] = out

    curve = curves.implicitize(k)
    poly = curve.poly
    _write_text(out, _dump_json(_curve_file_dict(k)), "curve file")

    # midpoint offsets keep the sweep off the cusp parameters themselves
    residuals = [
        curves.normalized_residual(
            poly, curves.param_point(k, (i + 0.5) * 2.0 * math.pi / samples)
        )
        for i in range(samples)
    ]
    gradient = curves.poly_gradient(poly)
    cusp_grad = max(
        curves.normalized_residual(part, cusp)
        for cusp in curves.cusps(k)
        for part in gradient
    )
    origin = poly.evaluate((Fraction(0), Fraction(0)))

    body = {
        "kind": "implicitize",
        "config": cfg,
        "config_sha256": _config_hash(cfg),
        "k": k,
        "degree": poly.total_degree(),
        "terms": len(poly.terms),
        "curve_file": out,
        "samples": samples,
        "max_residual": max(residuals),
        "mean_residual": sum(residuals) / len(residuals),
        "cusp_gradient_max": cusp_grad,
        "origin_value_nonzero": origin != 0,
    }
    if check == "astroid":
        body["astroid_check"] = _astroid_grid_check(poly)
    click.echo(f"curve file: {out}")
    _emit_report(body, report)


# -- classify --------------------------------------------------------------------


def _load_shrub(path) -> shrub_model.ShrubGraph:
    data = _load_json_file(path, "shrub file")
    try:
        return shrub_model.ShrubGraph.from_json(data)
    except shrub_model.ShrubError as exc:
        raise ConfigurationError(f"invalid shrub file {path!r}: {exc}")


def _puncture_dict(ref: shrub_model.PunctureRef) -> dict:
    if ref.kind == "bud":
        return {"kind": "bud", "bud": ref.bud}
    return {"kind": "cactus_cusp", "leaf": ref.leaf, "cusp": ref.cusp}


def _orientation_report(shrub: shrub_model.ShrubGraph) -> dict:
    """Orientation certificate, augmenting odd cactuses with parity sprigs
    first when needed, plus the independent checker's verdict."""
    augmented = bool(shrub_model.find_odd_cactuses(shrub))
    target = shrub
    aux_sprigs = ()
    if augmented:
        target, aux_sprigs, _, _ = shrub_model.augment_with_parity_sprigs(shrub)
    try:
        cert = shrub_model.orient_all(target)
    except shrub_model.ShrubError as exc:
        return {"failure": str(exc)}
    verified, check_failures = shrub_model.verify_certificate(target, cert)
    return {
        "augmented": augmented,
        "aux_sprigs": list(aux_sprigs),
        "orientable": cert.orientable,
        "certificate": cert.to_json(),
        "verified": bool(verified),
        "checker_failures": list(check_failures),
    }


@cli.command("classify")
@click.argument("shrub_file", type=click.Path(exists=True, dir_okay=False))
@click.option("--report", type=click.Path(dir_okay=False), default=None)
@_CONFIG_OPTION
@click.pass_context
def classify_command(ctx, shrub_file, report, config):
    """Report a shrub's structure: odd buds, odd cactuses, punctures,
    and an orientation certificate checked by an independent verifier."""
    cfg = _resolve_config(ctx, ("report",))
    cfg["shrub_file"] = shrub_file
    report = cfg["report"]
    shrub = _load_shrub(shrub_file)
    diagnostics = shrub_model.validate(shrub)
    if not diagnostics.ok:
        raise ConfigurationError(
            "shrub fails validation: " + "; ".join(diagnostics.failures)
        )

    classification = shrub_model.classify_buds(shrub)
    cactus_list = shrub_model.cactuses(shrub)
    punctures = shrub_model.required_puncture_set(shrub)
    sum_orders = sum(info.order for info in classification.buds.values())
    leaf_contacts = sum(
        1
        for junction in shrub.junctions
        for attach in junction.at
        if shrub.pieces[attach.piece].is_leaf
    )
    edge_count = len(shrub.sprig_ids()) + leaf_contacts

    body = {
        "kind": "classify",
        "config": cfg,
        "config_sha256": _config_hash(cfg),
        "pieces": {
            "leaves": list(shrub.leaf_ids()),
            "sprigs": list(shrub.sprig_ids()),
        },
        "buds": [
            {
                "bud": bud,
                "order": info.order,
                "on_leaf": info.on_leaf,
                "odd": info.odd_bud,
                "node": info.node,
                "tip": info.tip,
            }
            for bud, info in sorted(classification.buds.items())
        ],
        "odd_buds": classification.odd_buds,
        "cactuses": [
            {
                "leaves": list(c.leaves),
                "attachments": c.attachments,
                "odd": c.odd,
            }
            for c in cactus_list
        ],
        "odd_cactuses": sum(1 for c in cactus_list if c.odd),
        "parity": {
            "sum_of_star_orders": sum_orders,
            "twice_edge_count": 2 * edge_count,
            "consistent": sum_orders == 2 * edge_count,
        },
        "punctures": [_puncture_dict(ref) for ref in punctures],
        "very_simple": shrub_model.is_very_simple(shrub),
        "orientation": _orientation_report(shrub),
    }
    _emit_report(body, report)


# -- synthesize ------------------------------------------------------------------


def _tangency_spot_check(field: field_synth.VectorField, count: int, seed: int) -> dict:
    """Largest normalized tangency defect over seeded random unit vectors.

    Rows are rescaled by their largest component before any product is
    taken; towering composites otherwise overflow doubles when squared.
    A row that evaluates to exactly zero is tangent by convention.
    """
    rng = np.random.default_rng(seed)
    points = rng.normal(size=(count, 3))
    points /= np.linalg.norm(points, axis=1, keepdims=True)
    rows = field.evaluate_many(points)
    scale = np.max(np.abs(rows), axis=1)
    live = scale > 0.0
    unit_rows = rows[live] / scale[live, None]
    defect = np.abs(
        np.einsum("ij,ij->i", unit_rows, points[live])
    ) / np.linalg.norm(unit_rows, axis=1)
    return {
        "samples": count,
        "seed": seed,
        "zero_rows": int(np.sum(~live)),
        "max_normalized": float(defect.max()) if defect.size else 0.0,
    }


def _layout_report(layout: shrub_model.ShrubLayout) -> dict:
    body = {
        "mode": layout.mode,
        "pieces": len(layout.placements),
        "punctures": list(layout.punctures),
        "aux_sprigs": list(layout.aux_sprigs),
    }
    if layout.mode == "frame":
        body["frame_piece"] = layout.frame_piece
    else:
        body["base_bud"] = layout.base_bud
        body["maximal_segments"] = len(layout.maximal_segments)
    return body


def _factor_report(function: field_synth.SphereFunction) -> list:
    out = []
    for factor in function.factors:
        entry = {"label": factor.label, "kind": factor.kind}
        if factor.kind == "poly":
            entry["degree"] = factor.poly.total_degree()
        out.append(entry)
    return out


@cli.command("synthesize")
@click.argument("shrub_file", type=click.Path(exists=True, dir_okay=False))
@click.option(
    "--out",
    type=click.Path(dir_okay=False),
    default="field-bundle.json",
    show_default=True,
    help="Field bundle destination.",
)
@click.option(
    "--spot-checks",
    type=int,
    default=200,
    show_default=True,
    help="Random unit vectors for the tangency spot check.",
)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--report", type=click.Path(dir_okay=False), default=None)
@_CONFIG_OPTION
@click.pass_context
def synthesize_command(ctx, shrub_file, out, spot_checks, seed, report, config):
    """Lay a shrub out in the plane, compose its boundary function, and
    write the tangent field as a reloadable bundle."""
    cfg = _resolve_config(ctx, ("out", "spot_checks", "seed", "report"))
    cfg["shrub_file"] = shrub_file
    out = cfg["out"]
    spot_checks = cfg["spot_checks"]
    seed = cfg["seed"]
    report = cfg["report"]
    if not isinstance(spot_checks, int) or spot_checks < 1:
        raise click.BadParameter(
            "need at least one spot check", param_hint="--spot-checks"
        )

    shrub = _load_shrub(shrub_file)
    diagnostics = shrub_model.validate(shrub)
    if not diagnostics.ok:
        raise ConfigurationError(
            "shrub fails validation: " + "; ".join(diagnostics.failures)
        )
    try:
        layout = shrub_model.layout_shrub(shrub)
    except shrub_model.LayoutError as exc:
        raise ConfigurationError(f"layout unsatisfiable: {exc}")
    except shrub_model.ShrubError as exc:
        raise ConfigurationError(f"shrub rejected: {exc}")

    function = field_synth.compose_shrub_function(layout)
    field = field_synth.build_field(function)
    _require_writable(out, "bundle")
    field_synth.save_bundle(out, function)

    body = {
        "kind": "synthesize",
        "config": cfg,
        "config_sha256": _config_hash(cfg),
        "bundle_file": out,
        "layout": _layout_report(layout),
        "factors": _factor_report(function),
        "exceptional_points": [
            [float(c) for c in point] for point in function.exceptional_points()
        ],
        "south_spiral_rate": 2.0 * field.g_value((0.0, 0.0, -1.0)),
        "tangency": _tangency_spot_check(field, spot_checks, seed),
    }
    click.echo(f"bundle: {out}")
    _emit_report(body, report)


# -- simulate --------------------------------------------------------------------


def _parse_start(value):
    if value is None:
        return None
    if isinstance(value, str):
        parts = value.split(",")
    else:
        parts = list(value)
    try:
        coords = [float(c) for c in parts]
    except (TypeError, ValueError):
        raise ConfigurationError(f"start point {value!r} is not three numbers")
    if len(coords) != 3:
        raise ConfigurationError("start point needs exactly three coordinates")
    vec = np.asarray(coords, dtype=float)
    norm = float(np.linalg.norm(vec))
    if norm == 0.0:
        raise ConfigurationError("start point cannot be the origin")
    return vec / norm


def _derived_path(base: str, seed: int) -> str:
    stem, ext = os.path.splitext(base)
    return f"{stem}-seed{seed}{ext}"


_SIMULATE_KEYS = (
    "horizon",
    "rtol",
    "atol",
    "unit_speed",
    "fixed_step",
    "max_step",
    "min_step",
    "max_steps",
    "start",
    "seed",
    "seed_radius",
    "zero_samples",
    "window_fraction",
    "guard",
    "seeds",
    "out_csv",
    "plot",
    "report",
)


def _validate_simulate_config(cfg: dict) -> None:
    if not (isinstance(cfg["horizon"], (int, float)) and cfg["horizon"] > 0):
        raise ConfigurationError("horizon must be positive")
    for name in ("rtol", "atol"):
        if not (isinstance(cfg[name], (int, float)) and cfg[name] > 0):
            raise ConfigurationError(f"{name} must be positive")
    for name in ("fixed_step", "max_step", "min_step"):
        value = cfg[name]
        if value is not None and not (
            isinstance(value, (int, float)) and value > 0
        ):
            raise ConfigurationError(f"{name} must be positive when set")
    if not (isinstance(cfg["max_steps"], int) and cfg["max_steps"] >= 1):
        raise ConfigurationError("max_steps must be a positive integer")
    if not (isinstance(cfg["zero_samples"], int) and cfg["zero_samples"] >= 1):
        raise ConfigurationError("zero_samples must be a positive integer")
    if not (
        isinstance(cfg["window_fraction"], (int, float))
        and 0.0 < cfg["window_fraction"] <= 1.0
    ):
        raise ConfigurationError("window_fraction must lie in (0, 1]")
    if not (isinstance(cfg["guard"], (int, float)) and cfg["guard"] >= 0):
        raise ConfigurationError("guard must be nonnegative")
    if not (isinstance(cfg["seed"], int) and cfg["seed"] >= 0):
        raise ConfigurationError("seed must be a nonnegative integer")
    seeds = cfg["seeds"]
    if seeds is not None and not (isinstance(seeds, int) and seeds >= 1):
        raise ConfigurationError("seeds must be a positive integer when set")
    if seeds is not None and cfg["start"] is not None:
        raise ConfigurationError("an explicit start point conflicts with --seeds")


def _float_fmt(value: float) -> str:
    return format(value, ".6g")


def _stereo_svg(states: np.ndarray, zero_points: np.ndarray) -> str:
    """Plane picture of an orbit with the limit set's samples overdrawn.

    Projection from the north pole, (x, y, z) -> (x, y)/(1 - z); samples
    too close to the pole are dropped rather than drawn at huge radii, and
    the view box is clipped to inner percentiles so one late excursion
    cannot flatten the rest of the picture.
    """

    def project(rows):
        keep = rows[:, 2] < 1.0 - 1e-12
        pts = rows[keep]
        return np.column_stack(
            (pts[:, 0] / (1.0 - pts[:, 2]), -pts[:, 1] / (1.0 - pts[:, 2]))
        )

    orbit = project(states)
    omega = project(zero_points)
    visible = [p for p in (orbit, omega) if p.size]
    stacked = np.vstack(visible) if visible else np.zeros((1, 2))
    lo = np.percentile(stacked, 1, axis=0)
    hi = np.percentile(stacked, 99, axis=0)
    span = float(max(hi[0] - lo[0], hi[1] - lo[1], 1e-6))
    pad = 0.08 * span
    box = (lo[0] - pad, lo[1] - pad, (hi[0] - lo[0]) + 2 * pad, (hi[1] - lo[1]) + 2 * pad)
    dot = 0.008 * span
    stroke = 0.004 * span

    lines = [
        '<svg xmlns="http://www.w3.org/2000/svg" viewBox="'
        + " ".join(_float_fmt(v) for v in box)
        + '">',
        f'<rect x="{_float_fmt(box[0])}" y="{_float_fmt(box[1])}" '
        f'width="{_float_fmt(box[2])}" height="{_float_fmt(box[3])}" fill="white"/>',
    ]
    if orbit.size:
        points = " ".join(
            f"{_float_fmt(px)},{_float_fmt(py)}" for px, py in orbit
        )
        lines.append(
            f'<polyline points="{points}" fill="none" stroke="#1f6fb4" '
            f'stroke-width="{_float_fmt(stroke)}"/>'
        )
    if omega.size:
        lines.append('<g fill="#c23b22">')
        lines.extend(
            f'<circle cx="{_float_fmt(px)}" cy="{_float_fmt(py)}" r="{_float_fmt(dot)}"/>'
            for px, py in omega
        )
        lines.append("</g>")
    lines.append("</svg>")
    return "\n".join(lines) + "\n"


def _run_orbit(bundle_path: str, cfg: dict, seed: int):
    """One integration: returns (seed, csv text, svg text or None, report).

    Module-level so batch runs can ship it to worker processes; everything
    it needs travels as plain picklable values and the bundle is reloaded
    in the worker.
    """
    function = field_synth.load_bundle(bundle_path)
    field = field_synth.build_field(function)
    zero_points = flow_sim.sample_zero_set(function, cfg["zero_samples"])

    start = _parse_start(cfg["start"])
    if start is None:
        start = flow_sim.seed_orbit(field, cfg["seed_radius"], seed)
    options = flow_sim.IntegrateOptions(
        rtol=cfg["rtol"],
        atol=cfg["atol"],
        unit_speed=cfg["unit_speed"],
        fixed_step=cfg["fixed_step"],
        max_steps=cfg["max_steps"],
        min_step=cfg["min_step"],
        max_step=cfg["max_step"],
    )
    trajectory = flow_sim.integrate(field, start, cfg["horizon"], options)

    drift = None
    drift_note = None
    try:
        drift = flow_sim.first_integral_drift(
            trajectory, guard=cfg["guard"], zero_samples=zero_points
        )
    except flow_sim.FlowError as exc:
        drift_note = str(exc)
    winding = None
    try:
        summary = flow_sim.winding_summary(trajectory)
        winding = {"net": summary.net, "monotone_tail": summary.monotone_tail}
    except flow_sim.FlowError:
        pass
    estimate = flow_sim.omega_estimate(
        trajectory, zero_points, window_fraction=cfg["window_fraction"]
    )

    csv_text = flow_sim.trajectory_csv(trajectory)
    svg_text = None
    if cfg["plot"] is not None:
        svg_text = _stereo_svg(trajectory.states, zero_points)
    report = {
        "seed": None if cfg["start"] is not None else seed,
        "start": [float(c) for c in start],
        "samples": len(trajectory),
        "steps": dict(trajectory.diagnostics),
        "first_integral_drift": drift,
        "drift_note": drift_note,
        "winding": winding,
        "omega": estimate.as_dict(),
    }
    return seed, csv_text, svg_text, report


@cli.command("simulate")
@click.argument("bundle", type=click.Path(exists=True, dir_okay=False))
@click.option("--horizon", type=float, default=20.0, show_default=True)
@click.option("--rtol", type=float, default=flow_sim.RTOL_DEFAULT, show_default=True)
@click.option("--atol", type=float, default=flow_sim.ATOL_DEFAULT, show_default=True)
@click.option(
    "--unit-speed/--raw-speed",
    default=False,
    help="Follow the unit-speed direction field; horizons become arc length.",
)
@click.option("--fixed-step", type=float, default=None)
@click.option("--max-step", type=float, default=None)
@click.option("--min-step", type=float, default=None)
@click.option("--max-steps", type=int, default=500_000, show_default=True)
@click.option(
    "--start",
    type=str,
    default=None,
    help="Explicit start point x,y,z (normalized onto the sphere).",
)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option(
    "--seed-radius",
    type=float,
    default=0.05,
    show_default=True,
    help="Chart radius of the seeded start disk around the bottom of the sphere.",
)
@click.option("--zero-samples", type=int, default=1200, show_default=True)
@click.option("--window-fraction", type=float, default=0.5, show_default=True)
@click.option("--guard", type=float, default=flow_sim.GUARD_DEFAULT, show_default=True)
@click.option(
    "--seeds",
    type=int,
    default=None,
    help="Run this many consecutive seeds concurrently and merge the report.",
)
@click.option(
    "--out-csv",
    type=click.Path(dir_okay=False),
    default="trajectory.csv",
    show_default=True,
)
@click.option(
    "--plot",
    type=click.Path(dir_okay=False),
    default=None,
    help="Write a plane projection of the orbit and limit set samples.",
)
@click.option("--report", type=click.Path(dir_okay=False), default=None)
@_CONFIG_OPTION
@click.pass_context
def simulate_command(ctx, bundle, **_kwargs):
    """Integrate one or more orbits of a field bundle and report the
    estimated limit set, first-integral drift, and winding."""
    cfg = _resolve_config(ctx, _SIMULATE_KEYS)
    cfg["bundle"] = bundle
    _validate_simulate_config(cfg)
    _require_writable(cfg["out_csv"], "trajectory")
    if cfg["plot"] is not None:
        _require_writable(cfg["plot"], "plot")

    data = _load_json_file(bundle, "bundle file")
    try:
        field_synth.function_from_bundle(data)
    except (ValueError, KeyError) as exc:
        raise ConfigurationError(f"invalid bundle {bundle!r}: {exc}")

    seeds = cfg["seeds"]
    seed_values = (
        [cfg["seed"]] if seeds is None else list(range(cfg["seed"], cfg["seed"] + seeds))
    )
    try:
        if seeds is None or seeds == 1:
            results = [_run_orbit(bundle, cfg, seed_values[0])]
        else:
            workers = min(seeds, os.cpu_count() or 1)
            with ProcessPoolExecutor(max_workers=workers) as pool:
                results = list(
                    pool.map(
                        _run_orbit,
                        [bundle] * seeds,
                        [cfg] * seeds,
                        seed_values,
                    )
                )
    except flow_sim.FlowError as exc:
        raise NumericFailureError(f"integration failed: {exc}")
    except curves.DomainError as exc:
        raise NumericFailureError(f"evaluation failed: {exc}")
    except ValueError as exc:
        raise ConfigurationError(str(exc))

    runs = []
    for seed, csv_text, svg_text, run_report in results:
        csv_path = (
            cfg["out_csv"] if seeds is None else _derived_path(cfg["out_csv"], seed)
        )
        _write_text(csv_path, csv_text, "trajectory")
        files = {"trajectory_csv": csv_path}
        if svg_text is not None:
            plot_path = (
                cfg["plot"] if seeds is None else _derived_path(cfg["plot"], seed)
            )
            _write_text(plot_path, svg_text, "plot")
            files["plot_svg"] = plot_path
        run_report["files"] = files
        runs.append(run_report)

    body = {
        "kind": "simulate",
        "config": cfg,
        "config_sha256": _config_hash(cfg),
        "bundle": bundle,
        "zero_samples": cfg["zero_samples"],
        "runs": runs,
    }
    for run in runs:
        tail = run["omega"]
        click.echo(
            f"seed {run['seed']}: {run['samples']} samples, "
            f"attraction {_float_fmt(tail['attraction'])}, "
            f"coverage {_float_fmt(tail['coverage'])}"
        )
    _emit_report(body, cfg["report"])


# -- report ----------------------------------------------------------------------


def _render_implicitize(body: dict) -> list:
    lines = [
        f"implicit curve: k={body['k']} degree {body['degree']} "
        f"({body['terms']} terms) -> {body['curve_file']}",
        f"residual sweep: {body['samples']} samples, "
        f"max {_float_fmt(body['max_residual'])}, "
        f"mean {_float_fmt(body['mean_residual'])}",
        f"cusp gradients: max normalized {_float_fmt(body['cusp_gradient_max'])}",
        "origin value nonzero: " + ("yes" if body["origin_value_nonzero"] else "NO"),
    ]
    if "astroid_check" in body:
        grid = body["astroid_check"]
        lines.append(
            f"astroid grid: {grid['agreements']}/{grid['points']} agree, "
            f"{grid['shared_zeros']} shared zeros, "
            + ("exact arithmetic" if grid.get("exact") else "tolerance-based")
        )
    return lines


def _render_classify(body: dict) -> list:
    parity = body["parity"]
    orientation = body["orientation"]
    lines = [
        f"pieces: {len(body['pieces']['leaves'])} leaves, "
        f"{len(body['pieces']['sprigs'])} sprigs",
        f"odd buds: {body['odd_buds']}",
        f"odd cactuses: {body['odd_cactuses']}",
        f"parity: sum of star orders {parity['sum_of_star_orders']} vs "
        f"twice edges {parity['twice_edge_count']} "
        + ("(consistent)" if parity["consistent"] else "(BROKEN)"),
        f"punctures: {body['punctures']}",
        f"very simple: {'yes' if body['very_simple'] else 'no'}",
    ]
    if "failure" in orientation:
        lines.append(f"orientation failed: {orientation['failure']}")
    elif not orientation["orientable"]:
        reasons = orientation["certificate"]["failures"]
        first = reasons[0] if reasons else "no reason recorded"
        lines.append(f"orientation: not orientable ({first})")
    else:
        verdict = "verified" if orientation["verified"] else "REJECTED BY CHECKER"
        augmented = " (after parity augmentation)" if orientation["augmented"] else ""
        lines.append(f"orientation: certificate {verdict}{augmented}")
    return lines


def _render_synthesize(body: dict) -> list:
    layout = body["layout"]
    tangency = body["tangency"]
    return [
        f"bundle: {body['bundle_file']}",
        f"layout: {layout['mode']} mode, {layout['pieces']} pieces, "
        f"punctures {layout['punctures']}",
        f"factors: {len(body['factors'])} "
        f"({', '.join(f['label'] or f['kind'] for f in body['factors'])})",
        f"exceptional points: {len(body['exceptional_points'])}",
        f"south spiral rate: {_float_fmt(body['south_spiral_rate'])}",
        f"tangency spot check: max normalized "
        f"{_float_fmt(tangency['max_normalized'])} over {tangency['samples']} samples",
    ]


def _render_simulate(body: dict) -> list:
    lines = [
        f"bundle: {body['bundle']}",
        f"zero samples: {body['zero_samples']}",
    ]
    for run in body["runs"]:
        omega = run["omega"]
        drift = run["first_integral_drift"]
        drift_bit = (
            f"drift {_float_fmt(drift)}" if drift is not None else "drift n/a"
        )
        winding = run["winding"]
        winding_bit = (
            f", winding {_float_fmt(winding['net'])}" if winding else ""
        )
        lines.append(
            f"seed {run['seed']}: {run['samples']} samples, {drift_bit}, "
            f"attraction {_float_fmt(omega['attraction'])}, "
            f"coverage {_float_fmt(omega['coverage'])}{winding_bit}"
        )
    return lines


_RENDERERS = {
    "implicitize": _render_implicitize,
    "classify": _render_classify,
    "synthesize": _render_synthesize,
    "simulate": _render_simulate,
}


@cli.command("report")
@click.argument("report_file", type=click.Path(exists=True, dir_okay=False))
def report_command(report_file):
    """Render a report file produced by any other command as plain text."""
    body = _load_json_file(report_file, "report file")
    if not isinstance(body, dict) or body.get("kind") not in _RENDERERS:
        raise ConfigurationError(
            f"{report_file!r} is not a recognized report file"
        )
    lines = [f"{body['kind']} report (config {body['config_sha256'][:12]})"]
    lines.extend(_RENDERERS[body["kind"]](body))
    click.echo("\n".join(lines))


# -- entry point -----------------------------------------------------------------


def main(argv=None) -> int:
    """Run the command line; returns the exit code instead of raising."""
    try:
        cli.main(args=argv, prog_name="shrubfield", standalone_mode=False)
    except click.exceptions.Abort:
        click.echo("aborted", err=True)
        return 1
    except click.exceptions.Exit as exc:
        return int(exc.exit_code)
    except click.ClickException as exc:
        exc.show()
        return exc.exit_code
    return 0


if __name__ == "__main__":
    raise SystemExit(main())

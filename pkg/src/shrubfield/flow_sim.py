"""Orbit integration and long-run diagnostics for synthesized fields.

The flow lives on the unit sphere, so every accepted step is projected back
to it, and the winding angle about the poles axis is carried along as a
continuous unwrapped quantity. On each orbit the combination

    w(t) = rho(u(t)) * exp(-2 theta(t)),    rho(x, y, z) = (x^2 + y^2) G,

is conserved, which makes its relative drift the integrator's primary
accuracy gauge. Because theta can wind through hundreds of turns, w spans
an astronomical range; it is stored and compared in log form throughout.

Long-horizon runs estimate where an orbit accumulates by comparing its tail
against points sampled from the boundary zero set in the great-circle
metric.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Callable, NamedTuple

import numpy as np

from .curves import DomainError, param_point
from .field_synth import SphereFunction, VectorField
from .poly_core import parse_rational

RTOL_DEFAULT = 1e-10
ATOL_DEFAULT = 1e-12
GUARD_DEFAULT = 1e-2
MAX_COMPARE = 5000

TWO_PI = 2.0 * math.pi


class FlowError(RuntimeError):
    """Integration or diagnostic failure, tagged with a sphere location."""

    def __init__(self, message: str, location=None):
        if location is not None:
            spot = ", ".join(f"{float(c):.6g}" for c in location)
            message = f"{message} at ({spot})"
        super().__init__(message)
        self.location = (
            None if location is None else np.asarray(location, dtype=float)
        )


@dataclass(frozen=True)
class IntegrateOptions:
    """Controls for one integration run.

    `unit_speed` rescales the field to unit length away from its zeros, so
    horizons measure arc length instead of raw time; orbits near the
    boundary otherwise slow to a crawl (the field vanishes quadratically
    there) or race off the clock on towering composite functions. A
    `fixed_step` disables the error controller and marches with a constant
    step, which is the mode used for step-halving convergence checks.
    """

    rtol: float = RTOL_DEFAULT
    atol: float = ATOL_DEFAULT
    unit_speed: bool = False
    fixed_step: float | None = None
    max_steps: int = 500_000
    first_step: float | None = None
    min_step: float | None = None
    max_step: float | None = None


@dataclass(frozen=True)
class Trajectory:
    """Sampled orbit with winding and conserved-quantity diagnostics.

    `theta` is the continuous planar angle of (x, y); consecutive samples
    differ by less than a quarter turn by construction. `logrho` holds
    log((x^2 + y^2) G) at each sample (-inf exactly on the poles axis or
    the zero set), so `logw = logrho - 2 theta` never overflows even when
    w itself would. `steps` and `errors` record the accepted step size and
    its local error estimate per sample (zero for the initial sample).
    """

    times: np.ndarray
    states: np.ndarray
    theta: np.ndarray
    logrho: np.ndarray
    steps: np.ndarray
    errors: np.ndarray
    diagnostics: dict

    def __len__(self) -> int:
        return int(self.times.shape[0])

    @property
    def logw(self) -> np.ndarray:
        return self.logrho - 2.0 * self.theta

    @property
    def w(self) -> np.ndarray:
        with np.errstate(over="ignore"):
            return np.exp(self.logw)


# -- the embedded Runge-Kutta pair -------------------------------------------

_DP_A = (
    np.array([]),
    np.array([1 / 5]),
    np.array([3 / 40, 9 / 40]),
    np.array([44 / 45, -56 / 15, 32 / 9]),
    np.array([19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729]),
    np.array([9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656]),
    np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84]),
)
_DP_B5 = np.array(
    [35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0]
)
_DP_B4 = np.array(
    [
        5179 / 57600,
        0.0,
        7571 / 16695,
        393 / 640,
        -92097 / 339200,
        187 / 2100,
        1 / 40,
    ]
)
_DP_ERR = _DP_B5 - _DP_B4


def _make_deriv(
    field: VectorField, unit_speed: bool, reverse: bool
) -> Callable[[np.ndarray], np.ndarray]:
    def deriv(u: np.ndarray) -> np.ndarray:
        v = u / np.linalg.norm(u)
        f = field.evaluate_many(v[None, :])[0]
        if unit_speed:
            # rescale by the largest component first; squaring raw values
            # of towering composites would overflow doubles
            peak = float(np.max(np.abs(f)))
            if peak == 0.0:
                return np.zeros(3)
            f = f / peak
            f = f / np.linalg.norm(f)
        return -f if reverse else f

    return deriv


def _dp_step(u, h, deriv, rtol, atol):
    k = np.empty((7, 3))
    k[0] = deriv(u)
    for i in range(1, 7):
        k[i] = deriv(u + h * (_DP_A[i] @ k[:i]))
    u5 = u + h * (_DP_B5 @ k)
    if not np.all(np.isfinite(u5)):
        return u, math.inf
    err = h * (_DP_ERR @ k)
    scale = atol + rtol * np.maximum(np.abs(u), np.abs(u5))
    err_norm = math.sqrt(float(np.mean((err / scale) ** 2)))
    return u5 / np.linalg.norm(u5), err_norm


def _angle_increment(u, unew) -> float:
    if u[0] * u[0] + u[1] * u[1] == 0.0:
        return 0.0
    if unew[0] * unew[0] + unew[1] * unew[1] == 0.0:
        return 0.0
    d = math.atan2(unew[1], unew[0]) - math.atan2(u[1], u[0])
    return math.remainder(d, TWO_PI)


def _log_abs_function(function: SphereFunction, states: np.ndarray):
    out = np.zeros(states.shape[0])
    for factor in function.factors:
        vals = factor.value_many(states)
        with np.errstate(divide="ignore"):
            out += np.log(np.abs(vals))
    return out


def _log_rho(function: SphereFunction, states: np.ndarray) -> np.ndarray:
    rho2 = states[:, 0] ** 2 + states[:, 1] ** 2
    with np.errstate(divide="ignore"):
        out = np.log(rho2)
    return out + 2.0 * _log_abs_function(function, states)


def _refuse_exceptional(function: SphereFunction, p: np.ndarray) -> None:
    for q in function.exceptional_points():
        qf = np.array([float(c) for c in q])
        if np.linalg.norm(p - qf) < 1e-9:
            raise FlowError("start point sits on an exceptional point", p)


def integrate(
    field: VectorField,
    p0,
    horizon: float,
    options: IntegrateOptions | None = None,
) -> Trajectory:
    """Integrate one orbit for the given horizon.

    Adaptive embedded Runge-Kutta (orders 4 and 5) with the state projected
    back to the sphere after every accepted step. The winding angle is
    advanced by the wrapped planar increment of (x, y); any step that would
    swing it by a quarter turn or more is rejected and retried shorter, so
    unwrapping stays unambiguous even close to the poles axis. A negative
    horizon integrates the time-reversed field; reported times are always
    the elapsed durations, so they increase either way.

    Raises FlowError when the step size underflows (which happens when the
    orbit is driven into a puncture), when the step budget runs out, or
    when evaluation lands exactly on an exceptional point.
    """
    opts = options or IntegrateOptions()
    p = np.asarray(p0, dtype=float)
    if p.shape != (3,):
        raise ValueError("start point must be a 3-vector")
    nrm = float(np.linalg.norm(p))
    if abs(nrm - 1.0) > 1e-10:
        raise ValueError("start point must lie on the unit sphere")
    p = p / nrm
    _refuse_exceptional(field.function, p)

    span = abs(float(horizon))
    if span == 0.0 or not math.isfinite(span):
        raise ValueError("horizon must be finite and nonzero")
    if opts.fixed_step is not None and opts.fixed_step <= 0.0:
        raise ValueError("fixed step must be positive")
    deriv = _make_deriv(field, opts.unit_speed, horizon < 0)
    min_step = opts.min_step if opts.min_step is not None else span * 1e-14

    try:
        v0 = float(np.linalg.norm(deriv(p)))
    except DomainError as exc:
        raise FlowError(f"field evaluation refused the start ({exc})", p)
    if opts.fixed_step is not None:
        h = min(opts.fixed_step, span)
    elif opts.first_step is not None:
        h = min(opts.first_step, span)
    elif v0 > 0.0:
        h = min(span, 0.1 / v0)
    else:
        h = span

    times = [0.0]
    states = [p]
    rho2_0 = p[0] * p[0] + p[1] * p[1]
    th = math.atan2(p[1], p[0]) if rho2_0 > 0.0 else 0.0
    thetas = [th]
    steps = [0.0]
    errs = [0.0]
    t = 0.0
    u = p
    accepted = 0
    rejected_error = 0
    rejected_winding = 0

    while span - t > span * 1e-15:
        if accepted + rejected_error + rejected_winding >= opts.max_steps:
            raise FlowError("step budget exhausted before the horizon", u)
        if opts.max_step is not None:
            h = min(h, opts.max_step)
        h = min(h, span - t)
        if h < min_step:
            raise FlowError("step size underflow", u)
        try:
            unew, err_norm = _dp_step(u, h, deriv, opts.rtol, opts.atol)
        except DomainError as exc:
            raise FlowError(f"evaluation hit an exceptional point ({exc})", u)
        if opts.fixed_step is None and err_norm > 1.0:
            rejected_error += 1
            h *= max(0.2, 0.9 * err_norm ** -0.2)
            continue
        dth = _angle_increment(u, unew)
        if abs(dth) >= math.pi / 2:
            if opts.fixed_step is not None:
                raise FlowError(
                    "fixed step swings the winding angle by a quarter turn", u
                )
            rejected_winding += 1
            h *= 0.5
            continue
        t += h
        u = unew
        th += dth
        times.append(t)
        states.append(u)
        thetas.append(th)
        steps.append(h)
        errs.append(err_norm)
        accepted += 1
        if opts.fixed_step is None:
            if err_norm == 0.0:
                h *= 5.0
            else:
                h *= min(5.0, max(0.2, 0.9 * err_norm ** -0.2))

    state_arr = np.array(states)
    return Trajectory(
        times=np.array(times),
        states=state_arr,
        theta=np.array(thetas),
        logrho=_log_rho(field.function, state_arr),
        steps=np.array(steps),
        errors=np.array(errs),
        diagnostics={
            "accepted": accepted,
            "rejected_error": rejected_error,
            "rejected_winding": rejected_winding,
            "horizon": float(horizon),
            "unit_speed": opts.unit_speed,
            "fixed_step": opts.fixed_step,
        },
    )


def trajectory_csv(traj: Trajectory) -> str:
    """CSV dump with columns t,x,y,z,theta,w,step,err (w may print inf)."""
    lines = ["t,x,y,z,theta,w,step,err"]
    w = traj.w
    for i in range(len(traj)):
        x, y, z = traj.states[i]
        lines.append(
            ",".join(
                repr(float(v))
                for v in (
                    traj.times[i],
                    x,
                    y,
                    z,
                    traj.theta[i],
                    w[i],
                    traj.steps[i],
                    traj.errors[i],
                )
            )
        )
    return "\n".join(lines) + "\n"


# -- first integral -----------------------------------------------------------


def _pairwise_min_angle(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Min great-circle distance from each row of `a` to the set `b`."""
    mins = np.empty(a.shape[0])
    chunk = 1024
    for s in range(0, a.shape[0], chunk):
        dots = a[s : s + chunk] @ b.T
        np.clip(dots, -1.0, 1.0, out=dots)
        mins[s : s + chunk] = np.arccos(dots).min(axis=1)
    return mins


def first_integral_drift(
    traj: Trajectory,
    guard: float = GUARD_DEFAULT,
    zero_samples=None,
) -> float:
    """Largest relative excursion of w from its starting value.

    The comparison runs in log space, so orbits that wind through many
    turns cannot overflow it. When `zero_samples` is given, samples closer
    than `guard` (great-circle) to the zero set are excluded from the
    comparison; the reference value stays w at time zero regardless.

    Raises FlowError when w vanishes at the start (orbit beginning on the
    poles axis or on the zero set itself) or when the guard excludes every
    sample.
    """
    logw = traj.logw
    if not math.isfinite(float(logw[0])):
        raise FlowError("first integral vanishes at the start", traj.states[0])
    mask = np.ones(len(traj), dtype=bool)
    if zero_samples is not None:
        zs = np.asarray(zero_samples, dtype=float)
        mask &= _pairwise_min_angle(traj.states, zs) > guard
    if not mask.any():
        raise FlowError("the guard excluded every trajectory sample")
    return float(np.max(np.abs(np.expm1(logw[mask] - logw[0]))))


# -- meridian frames ----------------------------------------------------------


@dataclass(frozen=True)
class MeridianFrame:
    """Angle branch on the sphere cut along a single meridian.

    The branch takes values in [azimuth, azimuth + 2 pi). Off the cut it is
    smooth, and J(u) = rho(u) exp(-2 Theta(u)) is constant along each piece
    of an orbit between crossings; log J is the defined form wherever the
    squared boundary function is positive.
    """

    azimuth: float = -math.pi

    def theta_branch_many(self, states: np.ndarray) -> np.ndarray:
        alpha = np.arctan2(states[:, 1], states[:, 0])
        return self.azimuth + np.mod(alpha - self.azimuth, TWO_PI)

    def theta_branch(self, u) -> float:
        return float(
            self.theta_branch_many(np.asarray(u, dtype=float)[None, :])[0]
        )

    def on_cut_many(self, states: np.ndarray) -> np.ndarray:
        alpha = np.arctan2(states[:, 1], states[:, 0])
        return np.mod(alpha - self.azimuth, TWO_PI) == 0.0

    def log_j_many(
        self, function: SphereFunction, states: np.ndarray
    ) -> np.ndarray:
        return _log_rho(function, states) - 2.0 * self.theta_branch_many(
            states
        )


@dataclass(frozen=True)
class MeridianSegment:
    """One crossing-free piece of an orbit, as sample range [start, stop)."""

    start: int
    stop: int
    loop_count: int
    max_variation: float
    consistency_residual: float


@dataclass(frozen=True)
class MeridianReport:
    segments: tuple
    jump_log_factors: tuple
    on_cut_samples: tuple


def check_meridian_integral(
    traj: Trajectory, frame: MeridianFrame
) -> MeridianReport:
    """Constancy report for the cut-branch integral J along an orbit.

    The trajectory is split at meridian crossings (where the continuous
    winding angle and the frame's branch differ by a new multiple of
    2 pi). Within each segment the report gives the largest relative
    variation of J and the residual of the identity
    log J = log w + 4 pi k, with k the segment's loop count; between
    consecutive segments J jumps by a factor exp(+-4 pi) per full loop.
    """
    if len(traj) == 0:
        raise FlowError("empty trajectory")
    branch = frame.theta_branch_many(traj.states)
    k = np.rint((traj.theta - branch) / TWO_PI).astype(int)
    on_cut = np.flatnonzero(frame.on_cut_many(traj.states))

    cuts = np.flatnonzero(np.diff(k) != 0) + 1
    bounds = [0, *cuts.tolist(), len(traj)]
    log_j = traj.logrho - 2.0 * branch
    logw = traj.logw

    segments = []
    refs = []
    for s, e in zip(bounds[:-1], bounds[1:]):
        seg_cut = [i for i in on_cut.tolist() if s <= i < e]
        if len(seg_cut) == e - s:
            raise FlowError(
                "segment lies entirely on the cut meridian", traj.states[s]
            )
        finite = np.isfinite(log_j[s:e])
        if not finite.any():
            # orbit resting on the poles axis; J is identically zero there
            segments.append(MeridianSegment(s, e, int(k[s]), 0.0, 0.0))
            refs.append(-math.inf)
            continue
        vals = log_j[s:e][finite]
        ref = float(vals[0])
        variation = float(np.max(np.abs(np.expm1(vals - ref))))
        expected = logw[s:e][finite] + 2.0 * TWO_PI * k[s]
        residual = float(np.max(np.abs(vals - expected)))
        segments.append(
            MeridianSegment(s, e, int(k[s]), variation, residual)
        )
        refs.append(ref)
    jumps = tuple(
        float(b - a) for a, b in zip(refs[:-1], refs[1:])
    )
    return MeridianReport(
        segments=tuple(segments),
        jump_log_factors=jumps,
        on_cut_samples=tuple(int(i) for i in on_cut.tolist()),
    )


# -- winding ------------------------------------------------------------------


class WindingSummary(NamedTuple):
    net: float
    monotone_tail: bool


def winding_summary(traj: Trajectory) -> WindingSummary:
    """Net winding angle and whether the tail half moves monotonically."""
    if len(traj) < 3:
        raise FlowError("winding summary needs at least three samples")
    net = float(traj.theta[-1] - traj.theta[0])
    d = np.diff(traj.theta[len(traj) // 2 :])
    monotone = bool(np.all(d <= 0.0) or np.all(d >= 0.0))
    return WindingSummary(net, monotone)


# -- zero-set sampling --------------------------------------------------------


def _equator_piece():
    def sampler(count: int) -> np.ndarray:
        t = np.arange(count) * (TWO_PI / count)
        return np.stack(
            [np.cos(t), np.sin(t), np.zeros(count)], axis=1
        )

    return TWO_PI, sampler


def _hypocycloid_piece(source: dict):
    k = int(source["k"])
    (a, b), (c, d) = [
        [float(parse_rational(s)) for s in row] for row in source["matrix"]
    ]
    e, f = [float(parse_rational(s)) for s in source["offset"]]

    def on_sphere(t: float) -> np.ndarray:
        px, py = param_point(k, t)
        u = a * px + b * py + e
        v = c * px + d * py + f
        s = u * u + v * v
        p = np.array([2.0 * u, 2.0 * v, s - 1.0]) / (s + 1.0)
        return p / np.linalg.norm(p)

    probe = np.array([on_sphere(t) for t in np.linspace(0.0, TWO_PI, 64 * k)])
    length = float(np.sum(np.linalg.norm(np.diff(probe, axis=0), axis=1)))

    def sampler(count: int) -> np.ndarray:
        ts = np.arange(count) * (TWO_PI / count)
        return np.array([on_sphere(t) for t in ts])

    return length, sampler


def _arc_piece(arc):
    nv = np.array([float(c) for c in arc.n])
    mv = np.array([float(c) for c in arc.m])
    d = float(arc.d)
    e = float(arc.e)
    n2 = float(nv @ nv)
    center = (d / n2) * nv
    radius = math.sqrt(max(0.0, 1.0 - d * d / n2))
    q1 = np.array([float(c) for c in arc.endpoints[0]])
    q2 = np.array([float(c) for c in arc.endpoints[1]])
    e1 = q1 - center
    e1 /= np.linalg.norm(e1)
    e2 = np.cross(nv, e1)
    e2 /= np.linalg.norm(e2)
    w2 = q2 - center
    ang2 = math.atan2(float(w2 @ e2), float(w2 @ e1))
    mid = center + radius * (
        math.cos(ang2 / 2) * e1 + math.sin(ang2 / 2) * e2
    )
    if float(mid @ mv) - e < 0.0:
        span = ang2
    else:
        span = ang2 - TWO_PI if ang2 > 0.0 else ang2 + TWO_PI
    length = radius * abs(span)

    def sampler(count: int) -> np.ndarray:
        ts = np.linspace(0.0, span, count)
        pts = (
            center
            + radius * np.cos(ts)[:, None] * e1
            + radius * np.sin(ts)[:, None] * e2
        )
        return pts / np.linalg.norm(pts, axis=1)[:, None]

    return length, sampler


def _allocate(total: int, lengths: np.ndarray) -> np.ndarray:
    counts = np.ones(len(lengths), dtype=int)
    quotas = lengths / float(lengths.sum()) * total
    for _ in range(total - len(lengths)):
        counts[int(np.argmax(quotas - counts))] += 1
    return counts


def sample_zero_set(function: SphereFunction, count: int) -> np.ndarray:
    """Points on the realized boundary, spread across its pieces.

    Each factor contributes one parametric piece (the equator, a placed
    hypocycloid image, or a circular arc), and the requested count is
    allocated proportionally to estimated piece length, at least one point
    per piece. Closed pieces are sampled endpoint-free; arcs include their
    endpoints, so the punctures appear among the samples.
    """
    pieces = []
    for factor in function.factors:
        if factor.kind == "arc":
            pieces.append(_arc_piece(factor.arc))
            continue
        source = factor.source
        if source is None:
            raise ValueError(
                f"factor {factor.label!r} carries no parametric source"
            )
        if source["piece"] == "equator":
            pieces.append(_equator_piece())
        elif source["piece"] == "hypocycloid":
            pieces.append(_hypocycloid_piece(source))
        else:
            raise ValueError(f"unknown piece kind {source['piece']!r}")
    if not pieces:
        raise ValueError("function has no boundary pieces to sample")
    if count < len(pieces):
        raise ValueError("need at least one sample per boundary piece")
    lengths = np.array([length for length, _ in pieces])
    counts = _allocate(count, lengths)
    return np.concatenate(
        [sampler(n) for (_, sampler), n in zip(pieces, counts)]
    )


# -- omega-limit estimation ---------------------------------------------------


@dataclass(frozen=True)
class OmegaWindow:
    horizon: float
    attraction: float
    coverage: float


@dataclass(frozen=True)
class OmegaEstimate:
    """Tail-versus-boundary distances in the great-circle metric.

    `attraction` is the directed distance from the trajectory tail to the
    zero samples (small when the orbit hugs the boundary); `coverage` is
    the reverse direction (small when the tail visits every part of the
    boundary). The series holds both numbers at doubling prefix horizons,
    so convergence is visible in a single run.
    """

    t_start: float
    t_end: float
    attraction: float
    coverage: float
    symmetric: float
    series: tuple

    def as_dict(self) -> dict:
        return {
            "t_start": self.t_start,
            "t_end": self.t_end,
            "attraction": self.attraction,
            "coverage": self.coverage,
            "symmetric": self.symmetric,
            "series": [
                {
                    "horizon": w.horizon,
                    "attraction": w.attraction,
                    "coverage": w.coverage,
                }
                for w in self.series
            ],
        }


def omega_json(estimate: OmegaEstimate) -> str:
    return json.dumps(estimate.as_dict(), sort_keys=True, indent=2) + "\n"


def _thin(points: np.ndarray) -> np.ndarray:
    if points.shape[0] <= MAX_COMPARE:
        return points
    idx = np.linspace(0, points.shape[0] - 1, MAX_COMPARE).round().astype(int)
    return points[np.unique(idx)]


def omega_estimate(
    traj: Trajectory, zero_samples, window_fraction: float = 0.5
) -> OmegaEstimate:
    """Estimate how the orbit tail relates to the sampled boundary.

    For each prefix horizon T/8, T/4, T/2, T the tail window
    [(1 - window_fraction) h, h] is compared against the zero samples in
    both directions. Distances are reported, never judged: an orbit that
    stays away from the boundary simply shows large numbers.
    """
    if not 0.0 < window_fraction <= 1.0:
        raise ValueError("window fraction must lie in (0, 1]")
    zs = _thin(np.asarray(zero_samples, dtype=float))
    if zs.ndim != 2 or zs.shape[1] != 3 or zs.shape[0] == 0:
        raise ValueError("zero samples must be a nonempty (n, 3) array")
    total = float(traj.times[-1])
    if total <= 0.0:
        raise FlowError("trajectory spans no time")
    windows = []
    for horizon in (total / 8, total / 4, total / 2, total):
        lo = horizon * (1.0 - window_fraction)
        mask = (traj.times >= lo) & (traj.times <= horizon)
        if not mask.any():
            continue
        tail = _thin(traj.states[mask])
        attraction = float(np.max(_pairwise_min_angle(tail, zs)))
        coverage = float(np.max(_pairwise_min_angle(zs, tail)))
        windows.append(OmegaWindow(float(horizon), attraction, coverage))
    last = windows[-1]
    return OmegaEstimate(
        t_start=total * (1.0 - window_fraction),
        t_end=total,
        attraction=last.attraction,
        coverage=last.coverage,
        symmetric=max(last.attraction, last.coverage),
        series=tuple(windows),
    )


# -- seeding ------------------------------------------------------------------


def seed_orbit(field: VectorField, radius: float, seed: int) -> np.ndarray:
    """Deterministic pseudorandom start near the bottom of the sphere.

    The point is drawn at the given radius from the chart origin in the
    lower stereographic chart (radius 0 is the bottom rest point itself),
    at an angle chosen by the seeded generator. Same seed, same point.
    """
    if not 0.0 <= radius < 0.1:
        raise ValueError("seed radius must stay inside the tenth-size chart disk")
    rng = np.random.default_rng(seed)
    psi = float(rng.uniform(0.0, TWO_PI))
    a = radius * math.cos(psi)
    b = radius * math.sin(psi)
    s = a * a + b * b
    p = np.array([2.0 * a, 2.0 * b, s - 1.0]) / (s + 1.0)
    p = p / np.linalg.norm(p)
    if radius > 0.0 and field.function.value_many(p[None, :])[0] == 0.0:
        raise FlowError("seed landed on the boundary", p)
    return p

"""Geodesic integration, curve lengths and completeness probes on any chart."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import mpmath
import numpy as np
from scipy import integrate, optimize

from .errors import GeometryError, NegativeSpeedSquared, PointOutsideDomain
from .geometry import FORWARD, Chart, DifferentiationConfig, check_point, christoffel, evaluate_metric

REACHED_T = "reached_T"
LEFT_DOMAIN = "left_domain"
STEP_UNDERFLOW = "step_underflow"


@dataclass(frozen=True)
class IntegratorConfig:
    method: str = "adaptive_rk_45"
    rel_tol: float = 1e-11
    abs_tol: float = 1e-12
    max_steps: int = 200_000
    min_step: float = 1e-7
    exit_tol: float = 1e-10

    def __post_init__(self):
        if self.method != "adaptive_rk_45":
            raise ValueError(f"unsupported method {self.method!r}")
        if self.rel_tol <= 0 or self.abs_tol <= 0 or self.min_step <= 0:
            raise ValueError("tolerances must be positive")


@dataclass
class GeodesicTrace:
    """Accepted RK steps of one geodesic.

    ``norm_drift`` is the largest change of g(v,v) along the trace divided by
    1 + the sum of the absolute terms of g(v,v) at that point.
    """

    params: np.ndarray
    points: np.ndarray
    velocities: np.ndarray
    termination: str
    norm_drift: float
    speed2: float
    detail: str = ""
    _segments: list = field(default_factory=list, repr=False)

    @property
    def samples(self) -> list[tuple[float, np.ndarray, np.ndarray]]:
        return list(zip(self.params.tolist(), self.points, self.velocities))

    @property
    def final_param(self) -> float:
        return float(self.params[-1])

    @property
    def length(self) -> float:
        """Length of the traced arc (constant speed times affine span)."""
        return math.sqrt(abs(self.speed2)) * self.final_param

    def state_at(self, s: float) -> np.ndarray:
        """Dense-output state (point, velocity) at affine parameter s."""
        if not 0.0 <= s <= self.final_param:
            raise ValueError(f"{s} outside the traced span [0, {self.final_param}]")
        for lo, hi, dense in self._segments:
            if lo <= s <= hi:
                return dense(s)
        return np.concatenate([self.points[-1], self.velocities[-1]])

    def point_at(self, s: float) -> np.ndarray:
        return self.state_at(s)[: self.points.shape[1]]


def _margin(chart: Chart, x: np.ndarray) -> float:
    """Signed distance-like margin to the coordinate box (positive inside)."""
    m = math.inf
    for c, (lo, hi) in zip(x, chart.domain):
        if math.isfinite(lo):
            m = min(m, c - lo)
        if math.isfinite(hi):
            m = min(m, hi - c)
    return m


def _clip_inside(chart: Chart, x: np.ndarray) -> np.ndarray:
    out = x.copy()
    for i, (lo, hi) in enumerate(chart.domain):
        pad = 1e-9 * max(1.0, abs(lo) if math.isfinite(lo) else 1.0, abs(hi) if math.isfinite(hi) else 1.0)
        if math.isfinite(lo):
            out[i] = max(out[i], lo + pad)
        if math.isfinite(hi):
            out[i] = min(out[i], hi - pad)
    return out


class _Blowup(Exception):
    pass


def integrate_geodesic(chart: Chart, p0: Sequence[float], v0: Sequence[float], T: float,
                       cfg: IntegratorConfig = IntegratorConfig(),
                       dcfg: DifferentiationConfig = FORWARD) -> GeodesicTrace:
    p0 = check_point(chart, p0)
    v0 = np.asarray(v0, dtype=float)
    if v0.shape != (chart.dim,):
        raise ValueError(f"velocity must have {chart.dim} components")
    if not T > 0:
        raise ValueError("T must be positive")
    n = chart.dim

    def rhs(s, y):
        x, v = y[:n], y[n:]
        if not np.all(np.isfinite(y)):
            raise _Blowup("non-finite state")
        # stages that overshoot the box see the geometry at the nearest interior point
        xe = x if chart.contains(x) else _clip_inside(chart, x)
        G = christoffel(chart, xe, dcfg)
        acc = -np.einsum("kij,i,j->k", G, v, v)
        if not np.all(np.isfinite(acc)):
            raise _Blowup("non-finite acceleration")
        return np.concatenate([v, acc])

    def speed2(x, v):
        return float(v @ evaluate_metric(chart, x) @ v)

    s0 = speed2(p0, v0)
    params, pts, vels, segments = [0.0], [p0], [v0], []
    termination, detail = REACHED_T, ""
    solver = integrate.RK45(rhs, 0.0, np.concatenate([p0, v0]), T, rtol=cfg.rel_tol, atol=cfg.abs_tol)
    steps = 0
    while True:
        if solver.status == "finished":
            break
        if steps >= cfg.max_steps:
            termination, detail = STEP_UNDERFLOW, f"max_steps={cfg.max_steps} exhausted"
            break
        t_old = solver.t
        try:
            msg = solver.step()
        except (_Blowup, GeometryError, FloatingPointError) as exc:
            termination, detail = STEP_UNDERFLOW, f"{type(exc).__name__}: {exc}"
            break
        steps += 1
        if solver.status == "failed":
            termination, detail = STEP_UNDERFLOW, str(msg)
            break
        y = solver.y
        dense = solver.dense_output()
        if _margin(chart, y[:n]) <= 0:
            s_exit = optimize.brentq(lambda s: _margin(chart, dense(s)[:n]), t_old, solver.t, xtol=cfg.exit_tol)
            ye = dense(s_exit)
            segments.append((t_old, s_exit, dense))
            params.append(s_exit)
            pts.append(ye[:n])
            vels.append(ye[n:])
            termination = LEFT_DOMAIN
            break
        segments.append((t_old, solver.t, dense))
        params.append(solver.t)
        pts.append(y[:n].copy())
        vels.append(y[n:].copy())
        if solver.status == "running" and solver.step_size is not None and solver.step_size < cfg.min_step:
            termination, detail = STEP_UNDERFLOW, f"step size {solver.step_size:.3e} below min_step"
            break

    # change of g(v,v) relative to the size of its terms, so cancellation is not counted as drift
    drift = 0.0
    for x, v in zip(pts, vels):
        if chart.contains(x):
            try:
                g = evaluate_metric(chart, x)
            except GeometryError:
                continue
            terms = np.abs(g) * np.abs(np.outer(v, v))
            drift = max(drift, abs(float(v @ g @ v) - s0) / (1.0 + float(terms.sum())))
    return GeodesicTrace(np.asarray(params), np.asarray(pts), np.asarray(vels), termination, drift, s0,
                         detail, segments)


# --------------------------------------------------------------------------
# curve lengths


@dataclass(frozen=True)
class Path:
    """A parametrized curve with its velocity; both accept floats or mpmath numbers."""

    point: Callable
    velocity: Callable

    @staticmethod
    def line(p0: Sequence[float], v0: Sequence[float]) -> "Path":
        p0, v0 = [float(c) for c in p0], [float(c) for c in v0]
        return Path(lambda s: [a + s * b for a, b in zip(p0, v0)], lambda s: list(v0))


@dataclass(frozen=True)
class QuadratureConfig:
    epsabs: float = 1e-8
    epsrel: float = 1e-12
    limit: int = 500
    precision: int | str | None = "auto"
    cancellation_limit: float = 1e6
    max_digits: int = 1000


@dataclass(frozen=True)
class LengthResult:
    value: float
    error: float
    digits: int | None = None

    def __float__(self):
        return self.value


def _speed2_terms(chart: Chart, x, v):
    g = chart.metric_fn(tuple(x))
    n = len(v)
    terms = [g[i][j] * v[i] * v[j] for i in range(n) for j in range(n)]
    total = terms[0]
    for t_ in terms[1:]:
        total = total + t_
    return total, max(abs(t_) for t_ in terms)


def _check_speed2(q, scale):
    if q < -1e-10 * max(1.0, scale):
        raise NegativeSpeedSquared(f"g(γ',γ') = {float(q):.3e} < 0 along the curve")
    return q if q > 0 else 0 * q


def _integrand(chart: Chart, path: Path, digits: int | None):
    def f(s):
        if digits is None:
            x = path.point(s)
            if not chart.contains(x):
                raise PointOutsideDomain(f"curve leaves the chart at s = {s}")
            q, scale = _speed2_terms(chart, x, path.velocity(s))
            return math.sqrt(float(_check_speed2(float(q), float(scale))))
        with mpmath.workdps(digits):
            ms = mpmath.mpf(s)
            q, scale = _speed2_terms(chart, path.point(ms), path.velocity(ms))
            return float(mpmath.sqrt(_check_speed2(q, scale)))

    return f


def _cancellation(chart: Chart, path: Path, a: float, b: float, digits: int | None = None,
                  probes: int = 65) -> float:
    """Largest ratio between a term of g(γ',γ') and the sum, over evenly spaced probes."""
    worst = 1.0
    with mpmath.workdps(digits or 15):
        for s in np.linspace(a, b, probes):
            s = float(s) if digits is None else mpmath.mpf(float(s))
            q, scale = _speed2_terms(chart, path.point(s), path.velocity(s))
            worst = max(worst, float(scale) / max(abs(float(q)), 1e-300))
    return worst


def curve_length(chart: Chart, path: Path, interval: tuple[float, float],
                 cfg: QuadratureConfig = QuadratureConfig()) -> LengthResult:
    """∫ sqrt(g(γ', γ')) over ``interval`` by adaptive Gauss-Kronrod quadrature.

    The quadrature runs in floats.  The integrand is evaluated in mpmath
    when ``precision`` is a digit count, or, with ``"auto"``, when probing
    shows g(γ',γ') losing more than ``cancellation_limit`` to cancellation;
    digits are raised until the probed cancellation is covered, and the
    result is confirmed by a second run with 32 more digits.
    """
    a, b = float(interval[0]), float(interval[1])
    if a == b:
        return LengthResult(0.0, 0.0)
    if b < a:
        a, b = b, a
    if not chart.contains(path.point(a)) or not chart.contains(path.point(b)):
        raise PointOutsideDomain("curve endpoints must lie in the chart")

    def run(digits):
        return integrate.quad(_integrand(chart, path, digits), a, b, epsabs=cfg.epsabs, epsrel=cfg.epsrel,
                              limit=cfg.limit)

    if isinstance(cfg.precision, int):
        val, err = run(cfg.precision)
        return LengthResult(val, err, cfg.precision)
    if cfg.precision is None or _cancellation(chart, path, a, b) < cfg.cancellation_limit:
        val, err = run(None)
        return LengthResult(val, err)
    # raise the working digits until the probed cancellation leaves ~25 good ones
    digits = 32
    while math.log10(_cancellation(chart, path, a, b, digits)) > digits - 25:
        digits *= 2
        if digits > cfg.max_digits:
            raise GeometryError(f"g(γ',γ') cancels beyond {cfg.max_digits} digits")
    val, err = run(digits)
    check, _ = run(digits + 32)
    if abs(val - check) <= max(cfg.epsabs, err):
        return LengthResult(val, max(err, abs(val - check)), digits)
    raise GeometryError(f"length did not stabilize below {cfg.max_digits} digits")


# --------------------------------------------------------------------------
# completeness probes


@dataclass(frozen=True)
class ProbeSeeds:
    count: int = 8
    seed: int = 42
    direction: tuple[float, ...] | None = None
    points: tuple[tuple[float, ...], ...] | None = None


@dataclass
class ProbeRecord:
    p0: list[float]
    v0: list[float]
    termination: str
    final_param: float
    length: float
    norm_drift: float


@dataclass
class ProbeSummary:
    T_max: float
    fraction_reached: float
    records: list[ProbeRecord]


def _normalize(chart: Chart, p: np.ndarray, v: np.ndarray) -> np.ndarray:
    q = float(v @ evaluate_metric(chart, p) @ v)
    if abs(q) < 1e-12:
        return v
    return v / math.sqrt(abs(q))


def completeness_probe(chart: Chart, seeds: ProbeSeeds, T_max: float, cfg: IntegratorConfig = IntegratorConfig(),
                       dcfg: DifferentiationConfig = FORWARD) -> ProbeSummary:
    """Integrate unit-speed geodesics from seeded initial data; evidence only."""
    rng = np.random.default_rng(seeds.seed)
    if seeds.points is not None:
        starts = np.asarray(seeds.points, dtype=float)
    else:
        starts = chart.sample_points(seeds.count, seeds.seed)
    records = []
    for p in starts:
        if seeds.direction is not None:
            v = np.asarray(seeds.direction, dtype=float)
        else:
            v = rng.uniform(-1.0, 1.0, chart.dim)
        v = _normalize(chart, p, v)
        tr = integrate_geodesic(chart, p, v, T_max, cfg, dcfg)
        records.append(ProbeRecord(p.tolist(), v.tolist(), tr.termination, tr.final_param, tr.length, tr.norm_drift))
    reached = sum(r.termination == REACHED_T for r in records)
    return ProbeSummary(T_max, reached / len(records) if records else 0.0, records)

"""Built-in example manifolds with distinguished unit fields and checkable facts about them."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import UnknownManifold
from .geometry import (
    LORENTZIAN,
    RIEMANNIAN,
    Chart,
    ScalarFieldExpr,
    VectorFieldExpr,
    curvature_bundle,
    evaluate_metric,
    field_calculus,
    scalar_field_calculus,
    sectional,
)
from .jet import cos, exp, sin, sqrt
from .variation import SampleSpec, VariationConfig, classify_field

INF = math.inf
FLAG_TRUE_TOL = 1e-9
FLAG_FALSE_MIN = 1e-6


@dataclass
class FieldInfo:
    """A vector field on a catalog chart with what is known about it.

    ``lam`` is set when ``U = lam * E`` is a Killing field (``E`` its unit
    direction).  ``flags`` maps classification predicates to their expected
    truth value.
    """

    expr: VectorFieldExpr
    unit: bool = True
    lam: ScalarFieldExpr | None = None
    complete: bool = False
    flags: dict[str, bool] = field(default_factory=dict)


@dataclass
class CatalogEntry:
    id: str
    chart: Chart
    fields: dict[str, FieldInfo]
    scalars: dict[str, ScalarFieldExpr] = field(default_factory=dict)
    provenance: str = ""
    tags: frozenset[str] = frozenset()
    probe_t: float | None = None

    @property
    def default_field(self) -> str:
        return next(iter(self.fields))

    def field(self, name: str | None = None) -> FieldInfo:
        name = name or self.default_field
        try:
            return self.fields[name]
        except KeyError:
            raise UnknownManifold(f"{self.id!r} has no field {name!r}; known: {sorted(self.fields)}") from None

    def variation(self, t: float, name: str | None = None) -> VariationConfig:
        return VariationConfig(t, self.chart, self.field(name).expr)


@dataclass
class Assertion:
    """A named fact about an entry; ``fn`` returns a nonnegative residual."""

    name: str
    op: str
    tolerance: float
    fn: Callable[[], float]

    def check(self) -> tuple[float, bool]:
        r = float(self.fn())
        return r, r <= self.tolerance


# --------------------------------------------------------------------------
# metric component functions


def _const(rows):
    rows = [[float(c) for c in r] for r in rows]
    return lambda x: rows


def _euclidean(n):
    return _const(np.eye(n))


def _minkowski(n):
    m = np.eye(n)
    m[0, 0] = -1.0
    return _const(m)


def _coordinate_field(n, i, scale=None):
    def comps(x):
        out = [0.0] * n
        out[i] = 1.0 if scale is None else scale(x)
        return out

    return comps


def _hyperbolic(n):
    def metric(x):
        w = exp(2 * x[0])
        return [[1.0 if i == j == 0 else (w if i == j else 0.0) for j in range(n)] for i in range(n)]

    return metric


def _round_s2(x):
    s = sin(x[0])
    return [[1.0, 0.0], [0.0, s * s]]


def _cap_f(x):
    return sqrt(1 - x[0] * x[0] - x[1] * x[1])


def _cap_metric(x):
    # graph coordinates over the equatorial disk of the upper unit hemisphere
    d = 1 - x[0] * x[0] - x[1] * x[1]
    return [[1 + x[0] * x[0] / d, x[0] * x[1] / d],
            [x[0] * x[1] / d, 1 + x[1] * x[1] / d]]


def _sphere_cap_product(x):
    g0 = _cap_metric(x)
    f2 = 1 - x[0] * x[0] - x[1] * x[1]
    return [[g0[0][0], g0[0][1], 0.0], [g0[1][0], g0[1][1], 0.0], [0.0, 0.0, f2]]


def _berger(x):
    c, s = cos(x[0]), sin(x[0])
    return [[1.0, 0.0, 0.0], [0.0, c * c, 0.0], [0.0, 0.0, s * s]]


def _lorentzian_berger(x):
    c2, s2 = cos(x[0]) ** 2, sin(x[0]) ** 2
    return [[1.0, 0.0, 0.0],
            [0.0, c2 - 2 * c2 * c2, -2 * c2 * s2],
            [0.0, -2 * c2 * s2, s2 - 2 * s2 * s2]]


def _hopf(x):
    return [0.0, 1.0, 1.0]


def _warped(f):
    def metric(x):
        w = f(x[0]) ** 2
        return [[-1.0, 0.0, 0.0], [0.0, w, 0.0], [0.0, 0.0, w]]

    return metric


def _plane_ab(x):
    f = exp(-(x[0] + x[1]))
    return (1 + f * f) / (2 * f), (1 - f * f) / (2 * f)


def _plane_field(x):
    a, b = _plane_ab(x)
    return [a, b]


def incomplete_plane_riemannian(x):
    """The standard variation of the Lorentzian plane along its unit field, written out."""
    a, b = _plane_ab(x)
    return [[2 * a * a - 1, -2 * a * b], [-2 * a * b, 2 * b * b + 1]]


def _torus_f(x):
    return 2 + sin(x[0]) * cos(x[1])


def _product_circle(x):
    f = _torus_f(x)
    return [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, -f * f]]


def _normal_u(x):
    return [x[0] + x[1], x[1] + x[2], x[0] + x[2]]


def _normal_e(x):
    u = _normal_u(x)
    r = 1 / sqrt(u[0] * u[0] + u[1] * u[1] + u[2] * u[2])
    return [c * r for c in u]


PARALLEL = {"is_unit": True, "is_parallel": True, "is_killing": True, "is_closed": True, "is_geodesic": True}


# --------------------------------------------------------------------------
# entries


def _euclidean_entry(n):
    chart = Chart(n, ((-INF, INF),) * n, _euclidean(n), RIEMANNIAN, f"euclidean_{n}", ((-2.0, 2.0),) * n)
    E = VectorFieldExpr(chart, _coordinate_field(n, 0), "E")
    return CatalogEntry(f"euclidean_{n}", chart, {"E": FieldInfo(E, complete=True, flags=dict(PARALLEL))},
                        provenance="parallel field on Euclidean space; standard variation is Minkowski space")


def _minkowski_entry(n):
    chart = Chart(n, ((-INF, INF),) * n, _minkowski(n), LORENTZIAN, f"minkowski_{n}", ((-2.0, 2.0),) * n)
    E = VectorFieldExpr(chart, _coordinate_field(n, 0), "E")
    return CatalogEntry(f"minkowski_{n}", chart, {"E": FieldInfo(E, complete=True, flags=dict(PARALLEL))},
                        provenance="Minkowski space with its parallel timelike unit field")


def _hyperbolic_entry(n):
    chart = Chart(n, ((-INF, INF),) * n, _hyperbolic(n), RIEMANNIAN, f"hyperbolic_{n}", ((-1.5, 1.5),) * n)
    E1 = VectorFieldExpr(chart, _coordinate_field(n, 0), "E1")
    E2 = VectorFieldExpr(chart, _coordinate_field(n, n - 1, lambda x: exp(-x[0])), "E2")
    lam = ScalarFieldExpr(chart, lambda x: exp(x[0]), "lambda")
    return CatalogEntry(
        f"hyperbolic_{n}", chart,
        {
            "E1": FieldInfo(E1, complete=True, flags={"is_unit": True, "is_closed": True, "is_geodesic": True,
                                                      "is_killing": False, "is_parallel": False}),
            "E2": FieldInfo(E2, lam=lam, complete=True, flags={"is_unit": True, "is_killing": False}),
        },
        scalars={"lambda": lam},
        provenance="hyperbolic space; standard variation along E1 is de Sitter, along E2 anti-de Sitter",
    )


def _round_s2_entry():
    chart = Chart(2, ((0.15, math.pi - 0.15), (-3.0, 3.0)), _round_s2, RIEMANNIAN, "round_s2")
    Et = VectorFieldExpr(chart, lambda x: [1.0, 0.0], "Etheta")
    Ep = VectorFieldExpr(chart, lambda x: [0.0, 1 / sin(x[0])], "Ephi")
    lam = ScalarFieldExpr(chart, lambda x: sin(x[0]), "lambda")
    return CatalogEntry(
        "round_s2", chart,
        {
            "Etheta": FieldInfo(Et, flags={"is_unit": True, "is_closed": True, "is_geodesic": True,
                                           "is_killing": False}),
            "Ephi": FieldInfo(Ep, lam=lam, flags={"is_unit": True, "is_killing": False, "is_geodesic": False}),
        },
        scalars={"lambda": lam},
        provenance="unit round sphere in polar coordinates",
    )


def _sphere_cap_entry():
    box = ((-0.7, 0.7), (-0.7, 0.7), (-3.0, 3.0))
    chart = Chart(3, box, _sphere_cap_product, RIEMANNIAN, "sphere_cap_product")
    E = VectorFieldExpr(chart, lambda x: [0.0, 0.0, 1 / _cap_f(x)], "E")
    lam = ScalarFieldExpr(chart, _cap_f, "f")
    return CatalogEntry(
        "sphere_cap_product", chart,
        {"E": FieldInfo(E, lam=lam, flags={"is_unit": True, "is_killing": False, "is_geodesic": False})},
        scalars={"f": lam},
        provenance="open hemisphere times a line with warping f(p) = p.v; an open piece of the unit 3-sphere",
    )


def cap_chart() -> Chart:
    """The hemisphere factor of ``sphere_cap_product`` on its own."""
    return Chart(2, ((-0.7, 0.7), (-0.7, 0.7)), _cap_metric, RIEMANNIAN, "hemisphere")


def _berger_entry():
    box = ((0.05, math.pi / 2 - 0.05), (-3.0, 3.0), (-3.0, 3.0))
    chart = Chart(3, box, _berger, RIEMANNIAN, "berger_s3")
    E = VectorFieldExpr(chart, _hopf, "E")
    return CatalogEntry(
        "berger_s3", chart,
        {"E": FieldInfo(E, lam=ScalarFieldExpr(chart, lambda x: 1.0, "one"), complete=True,
                        flags={"is_unit": True, "is_killing": True, "is_geodesic": True, "is_closed": False})},
        provenance="unit 3-sphere in Hopf coordinates with the Hopf field",
    )


def _lorentzian_berger_entry():
    box = ((0.05, math.pi / 2 - 0.05), (-3.0, 3.0), (-3.0, 3.0))
    chart = Chart(3, box, _lorentzian_berger, LORENTZIAN, "lorentzian_berger_s3")
    E = VectorFieldExpr(chart, _hopf, "E")
    return CatalogEntry(
        "lorentzian_berger_s3", chart,
        {"E": FieldInfo(E, lam=ScalarFieldExpr(chart, lambda x: 1.0, "one"), complete=True,
                        flags={"is_unit": True, "is_killing": True, "is_geodesic": True, "is_closed": False})},
        provenance="Lorentzian Berger sphere: the 3-sphere with the Hopf direction made timelike",
    )


def _warped_entry(name, f, killing, probe_only=False):
    chart = Chart(3, ((-INF, INF),) * 3, _warped(f), LORENTZIAN, name, ((-1.0, 1.0),) * 3)
    E = VectorFieldExpr(chart, _coordinate_field(3, 0), "E")
    flags = {"is_unit": True, "is_closed": True, "is_geodesic": True, "is_killing": killing}
    lam = ScalarFieldExpr(chart, lambda x: 1.0, "one") if killing else None
    return CatalogEntry(
        name, chart, {"E": FieldInfo(E, lam=lam, complete=True, flags=flags)},
        provenance="warped product -dt^2 + f(t)^2 (dx^2 + dy^2) over the universal cover of a flat torus",
        tags=frozenset({"probe_only"}) if probe_only else frozenset(),
        probe_t=2.0,
    )


def _incomplete_plane_entry():
    chart = Chart(2, ((-50.0, 50.0), (-50.0, 50.0)), _minkowski(2), LORENTZIAN, "incomplete_plane",
                  ((-1.0, 1.0), (-1.0, 1.0)))
    E = VectorFieldExpr(chart, _plane_field, "E")
    return CatalogEntry(
        "incomplete_plane", chart,
        {"E": FieldInfo(E, flags={"is_unit": True, "is_closed": False, "is_killing": False})},
        provenance="Lorentzian plane whose standard variation along a unit field is incomplete",
        probe_t=2.0,
    )


def _product_circle_entry():
    box = ((0.0, 2 * math.pi), (0.0, 2 * math.pi), (-3.0, 3.0))
    chart = Chart(3, box, _product_circle, LORENTZIAN, "product_circle")
    E = VectorFieldExpr(chart, lambda x: [0.0, 0.0, 1 / _torus_f(x)], "E")
    lam = ScalarFieldExpr(chart, _torus_f, "f")
    return CatalogEntry(
        "product_circle", chart,
        {"E": FieldInfo(E, lam=lam, flags={"is_unit": True, "is_killing": False, "is_geodesic": False})},
        scalars={"f": lam},
        provenance="static product of a flat torus with a circle, g0 - f^2 ds^2",
        tags=frozenset({"static"}),
    )


def _normal_field_entry():
    chart = Chart(3, ((0.5, 2.0),) * 3, _euclidean(3), RIEMANNIAN, "normal_field_r3")
    U = VectorFieldExpr(chart, _normal_u, "U")
    E = VectorFieldExpr(chart, _normal_e, "E")
    return CatalogEntry(
        "normal_field_r3", chart,
        {
            "E": FieldInfo(E, flags={"is_unit": True, "is_orthogonally_normal": False}),
            "U": FieldInfo(U, unit=False, flags={"is_normal": True, "is_closed": False, "is_conformal": False}),
        },
        provenance="linear field on R^3 with normal but neither closed nor conformal endomorphism",
    )


def _build() -> dict[str, CatalogEntry]:
    entries = [
        _euclidean_entry(2), _euclidean_entry(3), _euclidean_entry(4),
        _minkowski_entry(3), _minkowski_entry(4),
        _hyperbolic_entry(2), _hyperbolic_entry(3),
        _round_s2_entry(), _sphere_cap_entry(), _berger_entry(), _lorentzian_berger_entry(),
        _warped_entry("warped_line", lambda t: 1.0, killing=True),
        _warped_entry("warped_line_expsq", lambda t: exp(t * t), killing=False, probe_only=True),
        _incomplete_plane_entry(), _product_circle_entry(), _normal_field_entry(),
    ]
    return {e.id: e for e in entries}


CATALOG = _build()


def list_ids() -> list[str]:
    return list(CATALOG)


def get_entry(id: str) -> CatalogEntry:
    try:
        return CATALOG[id]
    except KeyError:
        raise UnknownManifold(f"unknown manifold {id!r}; known: {', '.join(CATALOG)}") from None


def resolve(target: str) -> tuple[CatalogEntry, str]:
    """Split ``"id:field"`` (or bare ``"id"``) into entry and field name."""
    id, _, name = target.partition(":")
    entry = get_entry(id)
    name = name or entry.default_field
    entry.field(name)
    return entry, name


def targets(unit_only: bool = True) -> list[str]:
    out = []
    for e in CATALOG.values():
        for name, info in e.fields.items():
            if info.unit or not unit_only:
                out.append(f"{e.id}:{name}")
    return out


# --------------------------------------------------------------------------
# checkable facts


def _points(chart: Chart, count: int = 10, seed: int = 7) -> np.ndarray:
    return chart.sample_points(count, seed)


def _all_planes_residual(chart: Chart, value: float, count: int = 10) -> float:
    worst = 0.0
    for p in _points(chart, count):
        b = curvature_bundle(chart, p)
        for u, v in itertools.combinations(b.frame, 2):
            worst = max(worst, abs(sectional(b, u, v) - value))
        rng = np.random.default_rng(int(1e6 * abs(p[0])) % 2**32)
        u, v = rng.uniform(-1, 1, (2, chart.dim)) @ b.frame
        if abs(b.norm2(u) * b.norm2(v) - b.inner(u, v) ** 2) > 1e-3:
            worst = max(worst, abs(sectional(b, u, v) - value))
    return worst


def _flat_residual(chart: Chart) -> float:
    return max(float(np.abs(curvature_bundle(chart, p).Riemann).max()) for p in _points(chart))


def _scalar_residual(chart: Chart, value: float, count: int = 10) -> float:
    return max(abs(curvature_bundle(chart, p).scalar - value) / max(1.0, abs(value)) for p in _points(chart, count))


def _flag_residual(entry: CatalogEntry, name: str) -> float:
    """0 if every expected flag reproduces, else the worst offending distance."""
    info = entry.fields[name]
    cls = classify_field(entry.chart, info.expr, SampleSpec(10, 3))
    worst = 0.0
    for pred, expected in info.flags.items():
        r = cls.residual(pred)
        if expected:
            worst = max(worst, r)
        elif r <= FLAG_FALSE_MIN:
            worst = max(worst, 1.0)
    return worst


def _killing_multiple_residual(entry: CatalogEntry, name: str, t: float = 0.0) -> float:
    info = entry.fields[name]
    chart = entry.chart if t == 0.0 else entry.variation(t, name).chart
    U = info.expr.scaled(info.lam, "U")
    return classify_field(chart, U, SampleSpec(10, 3)).is_killing


def _metric_match(a: Chart, b: Chart) -> float:
    return max(float(np.abs(evaluate_metric(a, p) - evaluate_metric(b, p)).max()) for p in _points(a))


def expected_assertions(id: str) -> list[Assertion]:
    e = get_entry(id)
    out: list[Assertion] = []
    for name in e.fields:
        if e.fields[name].flags:
            out.append(Assertion(f"{name} classification flags", "classify_field", FLAG_TRUE_TOL,
                                 lambda name=name: _flag_residual(e, name)))
        if e.fields[name].lam is not None:
            out.append(Assertion(f"lambda*{name} is Killing", "classify_field", 1e-9,
                                 lambda name=name: _killing_multiple_residual(e, name)))
    c = e.chart
    if id.startswith(("euclidean", "minkowski")) or id == "warped_line":
        out.append(Assertion("curvature vanishes", "curvature_bundle", 1e-12, lambda: _flat_residual(c)))
    if id.startswith("euclidean"):
        out.append(Assertion("standard variation is flat", "curvature_bundle", 1e-12,
                             lambda: _flat_residual(e.variation(-2.0).chart)))
        n = c.dim
        mink = Chart(n, c.domain, _minkowski(n), LORENTZIAN, "mink", c.sample_box)
        out.append(Assertion("standard variation has Minkowski components", "evaluate_metric", 0.0,
                             lambda: _metric_match(e.variation(-2.0).chart, mink)))
    if id.startswith("hyperbolic"):
        out.append(Assertion("sectional curvature -1", "sectional", 1e-8, lambda: _all_planes_residual(c, -1.0)))
        out.append(Assertion("E1, t=-2: sectional curvature +1", "sectional", 1e-8,
                             lambda: _all_planes_residual(e.variation(-2.0, "E1").chart, 1.0)))
        out.append(Assertion("E2, t=-2: sectional curvature -1", "sectional", 1e-8,
                             lambda: _all_planes_residual(e.variation(-2.0, "E2").chart, -1.0)))
        n = c.dim
        out.append(Assertion("div E1 = n-1", "field_calculus", 1e-12,
                             lambda: max(abs(field_calculus(c, e.fields["E1"].expr, p).div - (n - 1))
                                         for p in _points(c))))
    if id == "round_s2":
        out.append(Assertion("scalar curvature 2", "curvature_bundle", 1e-10, lambda: _scalar_residual(c, 2.0)))
    if id == "sphere_cap_product":
        out.append(Assertion("sectional curvature +1", "sectional", 1e-8, lambda: _all_planes_residual(c, 1.0)))
        out.append(Assertion("t=-2: sectional curvature +1 (de Sitter)", "sectional", 1e-8,
                             lambda: _all_planes_residual(e.variation(-2.0).chart, 1.0)))
        out.append(Assertion("Hess f = -f g0 on the hemisphere", "scalar_field_calculus", 1e-10,
                             _hessian_cap_residual))
    if id == "berger_s3":
        for t in (-2.0, -0.5, 1.0, 5.0):
            out.append(Assertion(f"t={t:g}: scalar 2(3-t)", "curvature_bundle", 1e-8,
                                 lambda t=t: _scalar_residual(e.variation(t).chart, 2 * (3 - t))))
        out.append(Assertion("|A'_E|^2 = Ric(E,E) = 2", "field_calculus", 1e-9, lambda: _berger_norm_residual(e)))
    if id == "lorentzian_berger_s3":
        out.append(Assertion("scalar curvature 10", "curvature_bundle", 1e-8, lambda: _scalar_residual(c, 10.0)))
        out.append(Assertion("equals the standard variation of berger_s3", "evaluate_metric", 1e-14,
                             lambda: _metric_match(c, get_entry("berger_s3").variation(-2.0).chart)))
    if id == "incomplete_plane":
        out.append(Assertion("g_L(E,E) = -1", "evaluate_metric", 1e-12, lambda: _unit_residual(c, e, -1.0)))
        gr = e.variation(2.0).chart
        out.append(Assertion("g_R(E,E) = 1", "evaluate_metric", 1e-12, lambda: _unit_residual(gr, e, 1.0)))
        explicit = Chart(2, c.domain, incomplete_plane_riemannian, RIEMANNIAN, "g_R", c.sample_box)
        out.append(Assertion("g_R matches its closed form", "evaluate_metric", 1e-12,
                             lambda: _metric_match(gr, explicit)))
    return out


def _unit_residual(chart: Chart, e: CatalogEntry, value: float) -> float:
    E = e.field().expr
    return max(abs(float(E(p) @ evaluate_metric(chart, p) @ E(p)) - value) for p in _points(chart))


def _hessian_cap_residual() -> float:
    cap = cap_chart()
    f = ScalarFieldExpr(cap, _cap_f, "f")
    worst = 0.0
    for p in _points(cap):
        sc = scalar_field_calculus(cap, f, p)
        worst = max(worst, float(np.abs(sc.hessian + sc.value * evaluate_metric(cap, p)).max()))
    return worst


def _berger_norm_residual(e: CatalogEntry) -> float:
    worst = 0.0
    c = e.chart
    E = e.field().expr
    for p in _points(c):
        b = curvature_bundle(c, p, seed_field=E)
        fc = field_calculus(c, E, p, bundle=b)
        perp = b.frame[:-1]
        norm2 = sum(b.norm2(fc.A_E @ v) for v in perp)
        worst = max(worst, abs(norm2 - 2.0), abs(b.ric(fc.E, fc.E) - 2.0), float(np.abs(fc.lie_g).max()),
                    float(np.abs(fc.accel).max()))
    return worst

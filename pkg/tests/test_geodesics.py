import math

import numpy as np
import pytest

from canvar import jet
from canvar.catalog import CATALOG, get_entry
from canvar.errors import NegativeSpeedSquared, PointOutsideDomain
from canvar.geodesics import (
    LEFT_DOMAIN, REACHED_T, STEP_UNDERFLOW, IntegratorConfig, Path, ProbeSeeds, QuadratureConfig,
    completeness_probe, curve_length, integrate_geodesic,
)
from canvar.variation import estimate_epsilon


def test_straight_lines():
    chart = get_entry("euclidean_3").chart
    tr = integrate_geodesic(chart, (0.1, 0.2, 0.3), (1.0, -2.0, 0.5), 4.0)
    assert tr.termination == REACHED_T
    assert tr.final_param == pytest.approx(4.0)
    np.testing.assert_allclose(tr.point_at(2.5), [2.6, -4.8, 1.55], atol=1e-12)
    assert tr.length == pytest.approx(4 * math.sqrt(5.25), rel=1e-14)


def _great_circle(a, s):
    # through the equator point (1,0,0) with unit initial direction cos(a) d_theta + sin(a) d_phi
    d = np.array([0.0, math.sin(a), -math.cos(a)])
    x = math.cos(s) * np.array([1.0, 0.0, 0.0]) + math.sin(s) * d
    return np.array([math.acos(x[2]), math.atan2(x[1], x[0])])


@pytest.mark.parametrize("a", [0.3, 1.0, math.pi / 2])
def test_sphere_great_circles(a):
    chart = get_entry("round_s2").chart
    tr = integrate_geodesic(chart, (math.pi / 2, 0.0), (math.cos(a), math.sin(a)), 2 * math.pi)
    assert tr.termination == LEFT_DOMAIN
    assert tr.norm_drift < 1e-10
    for s in np.linspace(0, tr.final_param, 9):
        np.testing.assert_allclose(tr.point_at(s), _great_circle(a, s), atol=1e-8)


def test_equator_exits_at_chart_edge():
    chart = get_entry("round_s2").chart
    tr = integrate_geodesic(chart, (math.pi / 2, 0.0), (0.0, 1.0), 10.0)
    assert tr.termination == LEFT_DOMAIN
    assert tr.final_param == pytest.approx(3.0, abs=1e-9)


def test_incomplete_plane_geodesic_stops_early():
    e = get_entry("incomplete_plane")
    tr = integrate_geodesic(e.variation(2.0).chart, (0.0, 0.0), (1.0, 1.0), 40.0)
    assert tr.termination == STEP_UNDERFLOW
    assert tr.final_param < 10.0


def test_integrator_config_validation():
    with pytest.raises(ValueError):
        IntegratorConfig(method="euler")
    with pytest.raises(ValueError):
        integrate_geodesic(get_entry("euclidean_2").chart, (0.0, 0.0), (1.0, 0.0), -1.0)


def test_norm_drift_on_catalog_charts():
    rng = np.random.default_rng(3)
    for e in CATALOG.values():
        charts = [e.chart]
        for name, info in e.fields.items():
            if info.unit:
                charts.append(e.variation(-2.0 * estimate_epsilon(e.chart, info.expr), name).chart)
        for chart in charts:
            p = chart.sample_points(1, 9)[0]
            tr = integrate_geodesic(chart, p, rng.uniform(-1, 1, chart.dim), 1.5)
            assert tr.norm_drift <= 1e-9 * max(tr.final_param, 1.0), chart.name


# --- lengths -----------------------------------------------------------------

def test_euclidean_segment_length():
    chart = get_entry("euclidean_2").chart
    r = curve_length(chart, Path.line((0.0, 0.0), (3.0, 4.0)), (0.0, 2.0))
    assert r.value == pytest.approx(10.0, rel=1e-14)
    assert r.digits is None


def test_incomplete_plane_length():
    e = get_entry("incomplete_plane")
    r = curve_length(e.variation(2.0).chart, Path.line((0.0, 0.0), (1.0, 1.0)), (0.0, 40.0))
    assert abs(r.value - math.sqrt(2) / 2) <= 1e-6
    assert r.digits is not None


def test_length_additive_and_parametrization_free():
    chart = get_entry("round_s2").chart
    path = Path(lambda s: [1.0 + 0.3 * jet.sin(s), s], lambda s: [0.3 * jet.cos(s), 1.0])
    whole = curve_length(chart, path, (-1.0, 2.0)).value
    parts = curve_length(chart, path, (-1.0, 0.4)).value + curve_length(chart, path, (0.4, 2.0)).value
    assert whole == pytest.approx(parts, rel=1e-12)
    # u -> u^3 traces the same arc on [-1, 2^(1/3)]
    r = 2.0 ** (1 / 3)
    cubic = Path(lambda u: path.point(u ** 3), lambda u: [3 * u * u * c for c in path.velocity(u ** 3)])
    assert curve_length(chart, cubic, (-1.0, r)).value == pytest.approx(whole, rel=1e-10)
    assert curve_length(chart, path, (2.0, -1.0)).value == pytest.approx(whole, rel=1e-14)


def test_length_at_fixed_precision():
    chart = get_entry("hyperbolic_2").chart
    path = Path.line((0.0, 0.0), (0.0, 1.0))
    a = curve_length(chart, path, (0.0, 1.0)).value
    b = curve_length(chart, path, (0.0, 1.0), QuadratureConfig(precision=50)).value
    assert a == b == pytest.approx(1.0, rel=1e-14)


def test_timelike_curve_rejected():
    chart = get_entry("minkowski_3").chart
    with pytest.raises(NegativeSpeedSquared):
        curve_length(chart, Path.line((0.0, 0.0, 0.0), (1.0, 0.2, 0.0)), (0.0, 1.0))


def test_curve_must_stay_in_chart():
    chart = get_entry("round_s2").chart
    with pytest.raises(PointOutsideDomain):
        curve_length(chart, Path.line((1.0, 0.0), (1.0, 0.0)), (0.0, 5.0))


# --- probes ------------------------------------------------------------------

def test_probe_on_flat_warped_product():
    summary = completeness_probe(get_entry("warped_line").chart, ProbeSeeds(count=4, seed=1), 5.0)
    assert summary.fraction_reached == 1.0
    assert all(r.length == pytest.approx(5.0, rel=1e-10) for r in summary.records)


def test_probe_is_seeded():
    chart = get_entry("sphere_cap_product").chart
    a = completeness_probe(chart, ProbeSeeds(count=3, seed=5), 4.0)
    b = completeness_probe(chart, ProbeSeeds(count=3, seed=5), 4.0)
    assert [r.v0 for r in a.records] == [r.v0 for r in b.records]
    assert all(r.termination in (REACHED_T, LEFT_DOMAIN) for r in a.records)


def test_probe_with_fixed_direction():
    chart = get_entry("euclidean_2").chart
    s = completeness_probe(chart, ProbeSeeds(direction=(3.0, 4.0), points=((0.0, 0.0), (1.0, 1.0))), 2.0)
    assert [r.v0 for r in s.records] == [[0.6, 0.8], [0.6, 0.8]]

import numpy as np
import pytest

from canvar.catalog import CATALOG, expected_assertions, get_entry, list_ids, resolve, targets
from canvar.errors import UnknownManifold
from canvar.geometry import curvature_bundle, evaluate_metric, field_calculus
from canvar.variation import SampleSpec, classify_field

REQUIRED = ["euclidean_2", "euclidean_3", "euclidean_4", "hyperbolic_2", "hyperbolic_3", "sphere_cap_product",
            "berger_s3", "warped_line", "incomplete_plane", "product_circle", "normal_field_r3"]


def test_required_entries_present():
    assert set(REQUIRED) <= set(list_ids())


@pytest.mark.parametrize("id", list(CATALOG))
def test_known_facts(id):
    facts = expected_assertions(id)
    for a in facts:
        r, ok = a.check()
        assert ok, (a.name, a.op, r, a.tolerance)


def test_every_entry_has_checkable_facts():
    assert all(expected_assertions(id) for id in list_ids())


def test_resolve_and_targets():
    e, name = resolve("hyperbolic_3:E2")
    assert e.id == "hyperbolic_3" and name == "E2"
    assert resolve("berger_s3")[1] == "E"
    ts = targets()
    assert "normal_field_r3:E" in ts and "normal_field_r3:U" not in ts
    assert "normal_field_r3:U" in targets(unit_only=False)
    with pytest.raises(UnknownManifold):
        resolve("hyperbolic_3:E9")
    with pytest.raises(UnknownManifold):
        get_entry("klein_bottle")


def test_hopf_field():
    e = get_entry("berger_s3")
    p = (0.6, 0.4, -1.1)
    fc = field_calculus(e.chart, e.field().expr, p)
    b = curvature_bundle(e.chart, p)
    np.testing.assert_allclose(fc.lie_g, 0, atol=1e-14)
    np.testing.assert_allclose(fc.accel, 0, atol=1e-14)
    A_norm2 = sum(s * b.norm2(fc.A_E @ f) for f, s in zip(b.frame, b.signs))
    assert A_norm2 == pytest.approx(2.0, abs=1e-12)
    assert b.ric(fc.E, fc.E) == pytest.approx(2.0, abs=1e-12)


def test_incomplete_plane_field_is_unit_in_both_metrics():
    e = get_entry("incomplete_plane")
    gr = e.variation(2.0).chart
    for p in e.chart.sample_points(20, 4):
        E = e.field().expr(p)
        assert E @ evaluate_metric(e.chart, p) @ E == pytest.approx(-1.0, abs=1e-12)
        assert E @ evaluate_metric(gr, p) @ E == pytest.approx(1.0, abs=1e-12)


def test_normal_field_classification():
    e = get_entry("normal_field_r3")
    c = classify_field(e.chart, e.field("E").expr, SampleSpec(5, 1))
    # unit direction of the normal linear field is not orthogonally normal
    assert c.is_orthogonally_normal > 1e-3

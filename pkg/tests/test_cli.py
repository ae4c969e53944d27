import json
import math

import pytest

from canvar.cli import decimal_list, main


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_catalog_list(capsys):
    code, out, _ = run(capsys, "catalog", "list")
    assert code == 0 and "berger_s3" in out and "incomplete_plane" in out
    code, out, _ = run(capsys, "catalog", "list", "--format", "json")
    ids = [m["id"] for m in json.loads(out)["manifolds"]]
    assert "hyperbolic_3" in ids


def test_verify_berger_scalar(capsys):
    code, out, _ = run(capsys, "verify", "--manifolds", "berger_s3", "--identities", "cor3.9", "--t", "-2,1,5",
                       "--seed", "42", "--format", "json")
    assert code == 0
    doc = json.loads(out)
    assert [c["t"] for c in doc["cells"]] == [-2.0, 1.0, 5.0]
    assert all(c["pass"] and c["max_residual"] <= 1e-8 and "skipped_reason" not in c for c in doc["cells"])
    assert all(c["citation"] for c in doc["cells"])


def test_verify_text_table(capsys):
    code, out, _ = run(capsys, "verify", "--manifolds", "hyperbolic_2:E1", "--identities", "cor3.3,cor3.9",
                       "--t", "-3,1", "--samples", "4")
    assert code == 0
    assert out.splitlines()[0].split()[:4] == ["identity", "manifold", "t", "status"]
    assert out.rstrip().endswith("4 passed, 0 failed, 0 skipped")


@pytest.mark.parametrize("argv,flag", [
    (["verify", "--identities", "nonexistent"], "--identities"),
    (["verify", "--manifolds", "klein_bottle"], "--manifolds"),
    (["verify", "--t", "abc"], "--t"),
    (["verify", "--samples", "0"], "--samples"),
    (["curvature", "berger_s3", "--point", "0.5,0"], "--point"),
    (["geodesic", "euclidean_2", "--p0", "0,0", "--v0", "1,0"], "--T"),
    (["nullsurf", "spacelike_plane"], "lightlike"),
    (["nullsurf", "torus"], "example"),
    (["frobnicate"], "invalid choice"),
])
def test_usage_errors(capsys, argv, flag):
    code, _, err = run(capsys, *argv)
    assert code == 2
    assert flag in err


def test_exact_decimal_parsing():
    assert decimal_list("-2,0.5,1e1") == [-2.0, 0.5, 10.0]
    assert decimal_list("-2")[0] == -2.0


def test_forbidden_parameter_is_usage_error(capsys):
    code, _, err = run(capsys, "curvature", "berger_s3", "--point", "0.5,0,0", "--t", "-1")
    assert code == 2 and "ForbiddenParameter" in err


def test_curvature_query(capsys):
    code, out, _ = run(capsys, "curvature", "berger_s3", "--point", "0.5,0,0", "--t", "-2,1", "--format", "json")
    assert code == 0
    doc = json.loads(out)
    scalars = [r["scalar"] for r in doc["results"]]
    assert scalars == pytest.approx([10.0, 4.0], abs=1e-10)


def test_json_is_byte_identical(capsys, tmp_path):
    argv = ["verify", "--manifolds", "round_s2", "--identities", "thm3.6,cor3.8", "--t", "0.5,-3", "--samples", "3",
            "--format", "json"]
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    assert run(capsys, *argv, "--output", str(a))[0] == 0
    assert run(capsys, *argv, "--output", str(b))[0] == 0
    assert a.read_bytes() == b.read_bytes()
    doc = json.loads(a.read_text())
    assert set(doc) == {"schema_version", "seed", "mode", "cells"}


def test_empty_selection_gives_empty_cells(capsys):
    from canvar.report import dumps, document

    assert json.loads(dumps(document([], 42, "forward_exact")))["cells"] == []


def test_unwritable_sink(capsys, tmp_path):
    target = tmp_path / "missing" / "report.json"
    code, _, err = run(capsys, "verify", "--manifolds", "berger_s3", "--identities", "cor3.9", "--t", "1",
                       "--samples", "2", "--output", str(target))
    assert code == 2 and "--output" in err


def test_config_file_and_precedence(capsys, tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# sweep settings\nsamples = 3\nformat = json\nseed = 5\n")
    code, out, _ = run(capsys, "verify", "--config", str(cfg), "--manifolds", "berger_s3", "--identities", "cor3.9",
                       "--t", "1")
    doc = json.loads(out)
    assert code == 0 and doc["seed"] == 5 and doc["cells"][0]["samples"] == 3
    code, out, _ = run(capsys, "verify", "--config", str(cfg), "--seed", "9", "--manifolds", "berger_s3",
                       "--identities", "cor3.9", "--t", "1")
    assert json.loads(out)["seed"] == 9
    bad = tmp_path / "bad.cfg"
    bad.write_text("samples\n")
    assert run(capsys, "verify", "--config", str(bad))[0] == 2


def test_failed_cell_exit_code(capsys):
    # an absurd tolerance makes every evaluated equality cell fail
    code, out, _ = run(capsys, "verify", "--manifolds", "berger_s3", "--identities", "cor3.9", "--t", "1",
                       "--samples", "2", "--tol-equality", "1e-30")
    assert code == 1 and "FAIL" in out


def test_finite_difference_mode(capsys):
    code, out, _ = run(capsys, "verify", "--manifolds", "berger_s3", "--identities", "cor3.9,lemma3.1", "--t", "1",
                       "--samples", "2", "--mode", "finite_difference", "--format", "json")
    doc = json.loads(out)
    assert code == 0 and doc["mode"] == "finite_difference"
    assert all(c["tolerance"] == 1e-4 for c in doc["cells"])


def test_geodesic_length_row(capsys):
    code, out, _ = run(capsys, "geodesic", "incomplete_plane", "--p0", "0,0", "--v0", "1,1", "--T", "40")
    assert code == 0
    row = next(line for line in out.splitlines() if line.startswith("length"))
    assert abs(float(row.split()[1]) - math.sqrt(2) / 2) <= 1e-6


def test_probe_and_nullsurf(capsys):
    code, out, _ = run(capsys, "probe", "warped_line", "--seeds", "3", "--T", "2", "--format", "json")
    assert code == 0 and json.loads(out)["fraction_reached"] == 1.0
    code, out, _ = run(capsys, "nullsurf", "light_cone_3", "--points", "5")
    assert code == 0 and "pass" in out

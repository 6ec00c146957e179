import json

import pytest

from hsminkowski import report
from hsminkowski.cli import main, parse_param_spec, set_dotted
from hsminkowski.errors import ConfigError


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out = capsys.readouterr()
    return code, out.out, out.err


def test_catalog_lists_everything(capsys):
    code, out, _ = run(capsys, "catalog")
    assert code == 0
    for word in ("spaceform_conformal", "einstein_cone", "clifford_torus", "random_polynomial", "CSC2X"):
        assert word in out


def test_catalog_identities_show_gates(capsys):
    code, out, _ = run(capsys, "catalog", "--identities")
    assert code == 0
    ein = next(line for line in out.splitlines() if line.startswith("EIN1"))
    assert "position" in ein and "einstein" in ein


def test_catalog_json(capsys):
    code, out, _ = run(capsys, "catalog", "--json")
    doc = json.loads(out)
    assert code == 0
    assert doc["identities"]["CSC_i"]["gates"] == ["position", "constant_curvature"]
    assert "dim" in doc["metrics"]["euclidean"]["params"]


def test_verify_sphere_table_and_json(capsys, scenes_dir, tmp_path):
    out_file = tmp_path / "r.json"
    code, out, _ = run(capsys, "verify", scenes_dir / "sphere_euclidean.toml", "--levels", "8,12",
                       "--out", out_file)
    assert code == 0
    assert "summary:" in out and "POS1" in out
    doc = json.loads(out_file.read_text())
    assert doc["summary"]["exit_code"] == 0
    assert doc["scene"]["echo"].startswith("# Round sphere")
    assert [lv["nodes"] for lv in doc["identities"]["POS0"]["levels"]] == [[8, 8], [12, 12]]


def test_verify_degenerate_scene_exits_zero(capsys, scenes_dir):
    code, out, _ = run(capsys, "verify", scenes_dir / "ellipsoid_euclidean.toml", "--levels", "32,48",
                       "--format", "json")
    doc = json.loads(out)
    assert code == 0
    assert doc["identities"]["POS2"]["status"] == "degenerate"


def test_verify_gate_violation_exits_one(capsys, scenes_dir):
    code, out, _ = run(capsys, "verify", scenes_dir / "bad_gate_einstein_on_generic_warped.toml", "--levels", "8")
    assert code == 1
    assert "GateViolation(EIN1: Einstein defect)" in out


def test_verify_tight_tolerance_fails(capsys, scenes_dir):
    code, _, _ = run(capsys, "verify", scenes_dir / "ellipsoid_euclidean.toml", "--levels", "8,12")
    assert code == 1


def test_verify_seed_override(capsys, scenes_dir):
    code, out, _ = run(capsys, "verify", scenes_dir / "torus_euclidean_random_field.toml", "--levels", "8",
                       "--seed", "42", "--format", "json")
    assert json.loads(out)["seeds"]["field"] == 42


def test_flip_normal_flag(capsys, scenes_dir):
    _, a, _ = run(capsys, "verify", scenes_dir / "sphere_s4.toml", "--levels", "6", "--format", "json")
    _, b, _ = run(capsys, "verify", scenes_dir / "sphere_s4.toml", "--levels", "6", "--format", "json",
                  "--flip-normal")
    a, b = json.loads(a), json.loads(b)
    assert b["scene"]["parsed"]["quadrature"]["orientation_flip"] is True
    for ident, res in a["identities"].items():
        assert res["status"] == b["identities"][ident]["status"]


def test_worker_count_only_changes_timing(capsys, scenes_dir):
    path = scenes_dir / "torus_euclidean_random_field.toml"
    _, a, _ = run(capsys, "verify", path, "--levels", "48", "--format", "json", "--workers", "1")
    _, b, _ = run(capsys, "verify", path, "--levels", "48", "--format", "json", "--workers", "3")
    a, b = json.loads(a), json.loads(b)
    assert a["timing"]["workers"] == 1 and b["timing"]["workers"] == 3
    assert report.to_json(report.strip_timing(a)) == report.to_json(report.strip_timing(b))


@pytest.mark.parametrize(
    "argv",
    [
        ["verify", "missing.toml"],
        ["verify", "{scenes}/sphere_euclidean.toml", "--levels", "8,abc"],
        ["verify", "{scenes}/sphere_euclidean.toml", "--levels", "8x8x8"],
        ["sweep", "{scenes}/sphere_euclidean.toml", "--param", "surface.params.nope.deeper=0:1:2"],
        ["sweep", "{scenes}/sphere_euclidean.toml", "--param", "surface.params.rho=1:2"],
        ["sweep", "{scenes}/sphere_euclidean.toml", "--param", "surface.params.rho=-1:1:2"],
        ["selftest", "--suite", "astrology"],
    ],
)
def test_configuration_errors_exit_two(capsys, scenes_dir, argv):
    argv = [a.replace("{scenes}", str(scenes_dir)) for a in argv]
    code, _, err = run(capsys, *argv)
    assert code == 2
    assert "configuration error" in err


def test_bad_toml_exits_two(capsys, tmp_path):
    bad = tmp_path / "bad.toml"
    bad.write_text("identities = [\n")
    assert run(capsys, "verify", bad)[0] == 2


def test_sweep_table(capsys, scenes_dir):
    code, out, _ = run(capsys, "sweep", scenes_dir / "sphere_euclidean.toml", "--levels", "8,12",
                       "--param", "surface.params.rho=1:2:3")
    lines = out.splitlines()
    assert code == 0
    assert lines[0].startswith("surface.params.rho")
    assert [ln.split()[0] for ln in lines[2:]] == ["1", "1.5", "2"]


def test_sweep_json(capsys, scenes_dir):
    code, out, _ = run(capsys, "sweep", scenes_dir / "perturbed_sphere_s4.toml", "--levels", "6",
                       "--param", "surface.params.eps=0:0.1:2", "--format", "json")
    doc = json.loads(out)
    assert doc["values"] == [0.0, 0.1]
    eps0, eps1 = doc["reports"]
    assert eps0["diagnostics"]["H_std"][0] < 1e-12 < eps1["diagnostics"]["H_std"][0]


def test_selftest_single_suite(capsys):
    code, out, _ = run(capsys, "selftest", "--suite", "newton", "--suite", "umbilicity")
    assert code == 0
    assert "newton" in out and "umbilicity" in out and "lie-term" not in out


def test_param_helpers():
    assert parse_param_spec("a.b=0:1:3") == ("a.b", [0.0, 0.5, 1.0])
    doc = {"surface": {"params": {}}, "quadrature": {"levels": [8, 16]}}
    set_dotted(doc, "surface.params.rho", 2.0)
    set_dotted(doc, "quadrature.levels.1", 32)
    assert doc == {"surface": {"params": {"rho": 2.0}}, "quadrature": {"levels": [8, 32]}}
    with pytest.raises(ConfigError):
        set_dotted(doc, "surface.id", "x")
    with pytest.raises(ConfigError):
        set_dotted(doc, "quadrature.levels.5", 1)
    with pytest.raises(ConfigError):
        parse_param_spec("a=0:1:0")


def test_module_entry_point():
    import subprocess
    import sys

    proc = subprocess.run([sys.executable, "-m", "hsminkowski", "catalog", "--identities"],
                          capture_output=True, text=True, check=False)
    assert proc.returncode == 0
    assert "CSC2X" in proc.stdout

import copy

import pytest

from hsminkowski.errors import ConfigError
from hsminkowski.scene import load_scene, parse_scene, parse_scene_text

BASE = {
    "identities": ["POS0", "CSC_1"],
    "manifold": {"id": "spaceform_conformal", "params": {"dim": 3, "c": 1.0}},
    "surface": {"id": "geodesic_sphere", "params": {"rho": 0.5}},
    "field": {"kind": "position_catalog"},
}


def with_(path, value):
    doc = copy.deepcopy(BASE)
    node = doc
    *head, last = path
    for k in head:
        node = node.setdefault(k, {})
    node[last] = value
    return doc


def test_defaults_and_round_trip():
    sc = parse_scene(BASE)
    assert sc.levels == [16, 32, 64, 128]
    assert sc.tolerance("POS0") == 1e-6
    again = parse_scene(sc.to_dict())
    assert again.to_dict() == sc.to_dict()


def test_per_identity_tolerance():
    sc = parse_scene(with_(["tolerances", "per_identity"], {"CSC_1": 1e-4}))
    assert sc.tolerance("CSC_1") == 1e-4
    assert sc.tolerance("POS0") == 1e-6


@pytest.mark.parametrize(
    "path,value",
    [
        (["colour"], "red"),
        (["manifold", "flavour"], 1),
        (["manifold", "params", "radius"], 1.0),
        (["surface", "params", "rho"], -1.0),
        (["field", "kind"], "magnetic"),
        (["identities"], ["POS9"]),
        (["identities"], []),
        (["identities"], ["CSC_2"]),
        (["quadrature", "levels"], [1]),
        (["quadrature", "levels"], [[8, 8, 8]]),
        (["quadrature", "orientation_flip"], "yes"),
        (["tolerances", "identity"], -1.0),
        (["tolerances", "strictness"], 1.0),
        (["tolerances", "per_identity"], {"GEN0": 1e-3}),
        (["engine", "lie_path"], "guess"),
    ],
)
def test_invalid_scenes_are_rejected(path, value):
    with pytest.raises(ConfigError):
        parse_scene(with_(path, value))


def test_missing_sections():
    doc = copy.deepcopy(BASE)
    del doc["field"]
    with pytest.raises(ConfigError, match="field"):
        parse_scene(doc)


def test_toml_errors_and_files(tmp_path, scenes_dir):
    with pytest.raises(ConfigError):
        parse_scene_text("identities = [")
    with pytest.raises(ConfigError):
        load_scene(tmp_path / "missing.toml")
    sc, text = load_scene(scenes_dir / "clifford_s3.toml")
    assert sc.name == "clifford_s3"
    assert "clifford_torus" in text


def test_every_shipped_scene_parses(scenes_dir):
    files = sorted(scenes_dir.glob("*.toml"))
    assert len(files) >= 10
    for path in files:
        load_scene(path)

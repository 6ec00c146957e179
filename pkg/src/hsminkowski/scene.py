"""Scene files: what to verify, on which surface, with which field and rule.

Scenes are TOML documents with the sections ``manifold``, ``surface``,
``field``, ``quadrature``, ``tolerances`` and ``engine`` plus a top-level
``identities`` list.  Unknown keys are rejected.
"""

from __future__ import annotations

import copy
import re
from dataclasses import dataclass, field
from pathlib import Path

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from .errors import ConfigError
from .fields import make_field
from .geometry import make_manifold
from .hypersurface import make_surface

DEFAULT_TOLERANCES = {
    "identity": 1e-6,
    "const": 1e-7,
    "umbilic": 1e-8,
    "zero": 1e-8,
    "einstein_gate": 1e-6,
    "csc_gate": 1e-6,
    "position_gate": 1e-8,
}
LIE_PATHS = ("combinatorial", "trace")
_IDENTITY_RE = re.compile(r"^(GEN[012]|POS[012]|EIN[12]|CSC2X|CSC_\d+)$")


def default_levels(n: int):
    if n <= 2:
        return [16, 32, 64, 128]
    if n == 3:
        return [8, 16, 24, 32]
    return [8, 12, 16]


@dataclass
class Scene:
    manifold: dict
    surface: dict
    field: dict
    identities: list
    levels: list
    orientation_flip: bool = False
    tolerances: dict = field(default_factory=lambda: dict(DEFAULT_TOLERANCES))
    per_identity: dict = field(default_factory=dict)
    lie_path: str = "combinatorial"
    name: str = ""

    def build(self):
        """Instantiate ``(manifold, immersion, field)`` from the catalog specs."""
        M = make_manifold(self.manifold["id"], self.manifold.get("params"))
        N = make_surface(self.surface["id"], self.surface.get("params"), M)
        P = make_field(self.field["kind"], self.field.get("params"), self.field.get("seed"), M)
        return M, N, P

    def tolerance(self, identity: str) -> float:
        return float(self.per_identity.get(identity, self.tolerances["identity"]))

    def level_counts(self, n: int):
        out = []
        for lv in self.levels:
            if isinstance(lv, (list, tuple)):
                if len(lv) != n:
                    raise ConfigError(f"quadrature.levels: per-axis entry {lv} needs {n} counts")
                out.append([int(v) for v in lv])
            else:
                out.append([int(lv)] * n)
        return out

    def to_dict(self) -> dict:
        tol = dict(self.tolerances)
        if self.per_identity:
            tol["per_identity"] = dict(self.per_identity)
        out = {
            "identities": list(self.identities),
            "manifold": copy.deepcopy(self.manifold),
            "surface": copy.deepcopy(self.surface),
            "field": copy.deepcopy(self.field),
            "quadrature": {"levels": copy.deepcopy(self.levels), "orientation_flip": self.orientation_flip},
            "tolerances": tol,
            "engine": {"lie_path": self.lie_path},
        }
        if self.name:
            out["name"] = self.name
        return out

    @classmethod
    def from_dict(cls, doc: dict) -> "Scene":
        return parse_scene(doc)


def _check_keys(where, table, allowed, required=()):
    if not isinstance(table, dict):
        raise ConfigError(f"{where}: expected a table")
    unknown = set(table) - set(allowed)
    if unknown:
        raise ConfigError(f"{where}: unknown key(s) {', '.join(sorted(unknown))}")
    for key in required:
        if key not in table:
            raise ConfigError(f"{where}: missing required key {key!r}")


def parse_scene(doc: dict) -> Scene:
    _check_keys(
        "scene",
        doc,
        ("name", "identities", "manifold", "surface", "field", "quadrature", "tolerances", "engine"),
        ("identities", "manifold", "surface", "field"),
    )
    _check_keys("manifold", doc["manifold"], ("id", "params"), ("id",))
    _check_keys("surface", doc["surface"], ("id", "params"), ("id",))
    _check_keys("field", doc["field"], ("kind", "params", "seed"), ("kind",))
    for sec in ("manifold", "surface", "field"):
        params = doc[sec].get("params", {})
        if not isinstance(params, dict):
            raise ConfigError(f"{sec}.params: expected a table")

    ids = doc["identities"]
    if not isinstance(ids, list) or not ids:
        raise ConfigError("identities: expected a non-empty list")
    for ident in ids:
        if not isinstance(ident, str) or not _IDENTITY_RE.match(ident):
            raise ConfigError(f"identities: unknown identity {ident!r}")

    quad = doc.get("quadrature", {})
    _check_keys("quadrature", quad, ("levels", "orientation_flip"))
    levels = quad.get("levels")
    if levels is not None:
        if not isinstance(levels, list) or not levels:
            raise ConfigError("quadrature.levels: expected a non-empty list")
        for lv in levels:
            vals = lv if isinstance(lv, list) else [lv]
            if not all(isinstance(v, int) and v >= 2 for v in vals):
                raise ConfigError(f"quadrature.levels: bad entry {lv!r} (integers >= 2)")
    flip = quad.get("orientation_flip", False)
    if not isinstance(flip, bool):
        raise ConfigError("quadrature.orientation_flip: expected true/false")

    tol_doc = dict(doc.get("tolerances", {}))
    per_identity = tol_doc.pop("per_identity", {})
    _check_keys("tolerances", tol_doc, DEFAULT_TOLERANCES)
    tolerances = dict(DEFAULT_TOLERANCES)
    for key, val in tol_doc.items():
        if not isinstance(val, (int, float)) or val <= 0:
            raise ConfigError(f"tolerances.{key}: expected a positive number")
        tolerances[key] = float(val)
    if not isinstance(per_identity, dict):
        raise ConfigError("tolerances.per_identity: expected a table")
    for key, val in per_identity.items():
        if key not in ids:
            raise ConfigError(f"tolerances.per_identity.{key}: identity not selected")
        if not isinstance(val, (int, float)) or val <= 0:
            raise ConfigError(f"tolerances.per_identity.{key}: expected a positive number")

    engine = doc.get("engine", {})
    _check_keys("engine", engine, ("lie_path",))
    lie_path = engine.get("lie_path", "combinatorial")
    if lie_path not in LIE_PATHS:
        raise ConfigError(f"engine.lie_path: expected one of {LIE_PATHS}")

    scene = Scene(
        manifold=copy.deepcopy(doc["manifold"]),
        surface=copy.deepcopy(doc["surface"]),
        field=copy.deepcopy(doc["field"]),
        identities=list(ids),
        levels=copy.deepcopy(levels) if levels is not None else [],
        orientation_flip=flip,
        tolerances=tolerances,
        per_identity={k: float(v) for k, v in per_identity.items()},
        lie_path=lie_path,
        name=str(doc.get("name", "")),
    )
    # resolve catalog ids and parameters now, before any heavy computation
    M, N, _ = scene.build()
    if not scene.levels:
        scene.levels = default_levels(N.n)
    scene.level_counts(N.n)
    for ident in ids:
        if ident.startswith("CSC_"):
            i = int(ident[4:])
            if i > N.n - 1:
                raise ConfigError(f"identities: {ident} needs i <= n - 1 = {N.n - 1}")
    return scene


def parse_scene_text(text: str) -> Scene:
    try:
        doc = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"scene syntax error: {exc}") from None
    return parse_scene(doc)


def load_scene(path) -> tuple[Scene, str]:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read scene {path}: {exc}") from None
    scene = parse_scene_text(text)
    if not scene.name:
        scene.name = path.stem
    return scene, text

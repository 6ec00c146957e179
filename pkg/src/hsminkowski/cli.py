"""Command line: ``catalog``, ``verify``, ``selftest`` and ``sweep``.

Exit codes: 0 when every selected identity passes (or is degenerate, i.e. all
of its terms vanish), 1 when any identity fails, violates a gate, or the
geometry breaks down, 2 on configuration errors.
"""

from __future__ import annotations

import argparse
import copy
import json
import sys
from pathlib import Path

import numpy as np

from . import report as rpt
from .errors import ConfigError, GeometryError
from .fields import FIELD_KINDS
from .geometry import METRICS
from .hypersurface import SURFACES
from .identities import convergence_sweep, gates_for
from .scene import parse_scene, tomllib

IDENTITY_DOCS = {
    "GEN0": "Lie term (i = 0) - n <P,nu> H_1; any vector field P",
    "GEN1": "Lie term (i = 1) - 2 binom(n,2) <P,nu> H_2 - Ric(P,nu) + <P,nu> Ric(nu,nu); any P",
    "GEN2": "Lie term (i = 2) + Ricci, H_3 and curvature-trace terms; any P",
    "POS0": "GEN0 with the Lie term of a position field, n f H_0",
    "POS1": "GEN1 with the Lie term of a position field, (n-1) n f H_1",
    "POS2": "GEN2 with the Lie term of a position field, (n-2) binom(n,2) f H_2",
    "EIN1": "f H_1 - <P,nu> H_2 on Einstein manifolds",
    "EIN2": "3 binom(n,3)(f H_2 - <P,nu> H_3) + curvature traces on Einstein manifolds",
    "CSC_i": "f H_i - <P,nu> H_(i+1), 0 <= i <= n-1, constant sectional curvature",
    "CSC2X": "f H_2 - <P,nu> H_3, constant sectional curvature",
}
GATE_DOCS = {
    "position": "field claims to be a position field and its conformal defect is <= position_gate",
    "einstein": "|Ric - (tr Ric / d) g| <= einstein_gate at every node",
    "constant_curvature": "curvature_model_residual <= csc_gate at every node",
}


def _catalog_doc() -> dict:
    return {
        "metrics": {k: {"params": v[1], "description": v[2]} for k, v in METRICS.items()},
        "surfaces": {k: {"params": v[1], "description": v[2]} for k, v in SURFACES.items()},
        "fields": FIELD_KINDS,
        "identities": {
            k: {"description": v, "gates": gates_for(k if k != "CSC_i" else "CSC_0")}
            for k, v in IDENTITY_DOCS.items()
        },
        "gates": GATE_DOCS,
    }


def cmd_catalog(args) -> int:
    doc = _catalog_doc()
    if args.json:
        print(json.dumps(doc, indent=2, sort_keys=True))
        return 0
    if args.identities:
        for k, v in doc["identities"].items():
            gates = ", ".join(v["gates"]) or "none"
            print(f"{k:<6} gates: {gates:<28} {v['description']}")
        print()
        for k, v in GATE_DOCS.items():
            print(f"gate {k}: {v}")
        return 0
    for section in ("metrics", "surfaces", "fields"):
        print(f"{section}:")
        for k, v in doc[section].items():
            print(f"  {k:<22} {v['description']}")
            for p, desc in v["params"].items():
                print(f"      {p}: {desc}")
    print("identities:")
    for k, v in doc["identities"].items():
        print(f"  {k:<22} {v['description']}")
    return 0


def _parse_levels(text: str):
    levels = []
    for item in text.split(","):
        item = item.strip()
        try:
            if "x" in item:
                levels.append([int(v) for v in item.split("x")])
            else:
                levels.append(int(item))
        except ValueError:
            raise ConfigError(f"--levels: cannot parse {item!r} (use e.g. 16,32 or 8x16,16x32)") from None
    return levels


def _load_doc(path):
    try:
        with open(path, "rb") as fh:
            text_bytes = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read scene {path}: {exc}") from None
    text = text_bytes.decode("utf-8")
    try:
        doc = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from None
    return doc, text


def _apply_overrides(doc: dict, args) -> dict:
    doc = copy.deepcopy(doc)
    if getattr(args, "levels", None):
        doc.setdefault("quadrature", {})["levels"] = _parse_levels(args.levels)
    if getattr(args, "tol", None) is not None:
        doc.setdefault("tolerances", {})["identity"] = float(args.tol)
    if getattr(args, "seed", None) is not None:
        doc["field"]["seed"] = int(args.seed)
    if getattr(args, "flip_normal", False):
        doc.setdefault("quadrature", {})["orientation_flip"] = True
    return doc


def _scene_name(doc, path):
    return doc.get("name") or Path(path).stem


def _run(doc, text, name, workers):
    scene = parse_scene(doc)
    scene.name = scene.name or name
    result = convergence_sweep(scene, workers=workers)
    return rpt.report_dict(result, text)


def cmd_verify(args) -> int:
    doc, text = _load_doc(args.scene)
    doc = _apply_overrides(doc, args)
    out = _run(doc, text, _scene_name(doc, args.scene), args.workers)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(rpt.to_json(out))
    if args.format == "json":
        sys.stdout.write(rpt.to_json(out))
    else:
        sys.stdout.write(rpt.format_table(out))
    return out["summary"]["exit_code"]


def cmd_selftest(args) -> int:
    from . import selftest

    suites = args.suite or list(selftest.SUITES)
    for s in suites:
        if s not in selftest.SUITES:
            raise ConfigError(f"unknown suite {s!r}; known: {', '.join(selftest.SUITES)}")
    checks = selftest.run(suites, seed=args.seed)
    width = max(len(c.name) for c in checks)
    failed = 0
    for c in checks:
        mark = "ok  " if c.ok else "FAIL"
        failed += not c.ok
        print(f"{mark} [{c.suite:<10}] {c.name:<{width}}  {c.value:.2e} <= {c.tol:.0e}")
    print()
    for s in suites:
        sub = [c for c in checks if c.suite == s]
        good = sum(c.ok for c in sub)
        print(f"{s:<12} {good}/{len(sub)}")
    return 1 if failed else 0


def parse_param_spec(spec: str):
    """``key=a:b:steps`` -> (key, values)."""
    if "=" not in spec:
        raise ConfigError(f"--param: expected key=a:b:steps, got {spec!r}")
    key, rng = spec.split("=", 1)
    parts = rng.split(":")
    if len(parts) != 3:
        raise ConfigError(f"--param: expected a:b:steps, got {rng!r}")
    try:
        a, b, steps = float(parts[0]), float(parts[1]), int(parts[2])
    except ValueError:
        raise ConfigError(f"--param: cannot parse range {rng!r}") from None
    if steps < 1:
        raise ConfigError("--param: steps must be >= 1")
    return key.strip(), [float(v) for v in np.linspace(a, b, steps)]


def set_dotted(doc: dict, key: str, value):
    """Set ``doc[k1][k2]...`` for ``key = "k1.k2..."``; list indices are integers.

    Every component must already exist, except a new entry directly below a
    ``params`` table (validated later against the catalog schema).
    """
    parts = key.split(".")
    node = doc
    for depth, part in enumerate(parts):
        last = depth == len(parts) - 1
        if isinstance(node, list):
            try:
                idx = int(part)
            except ValueError:
                raise ConfigError(f"--param {key}: {part!r} is not a list index") from None
            if not -len(node) <= idx < len(node):
                raise ConfigError(f"--param {key}: index {idx} out of range")
            if last:
                node[idx] = value
                return
            node = node[idx]
        elif isinstance(node, dict):
            if part not in node:
                if last and depth > 0 and parts[depth - 1] == "params":
                    node[part] = value
                    return
                raise ConfigError(f"--param {key}: no key {part!r} in the scene")
            if last:
                node[part] = value
                return
            node = node[part]
        else:
            raise ConfigError(f"--param {key}: {parts[depth - 1]!r} is not a table or list")


def cmd_sweep(args) -> int:
    doc, text = _load_doc(args.scene)
    doc = _apply_overrides(doc, args)
    key, values = parse_param_spec(args.param)
    docs = []
    for v in values:
        d = copy.deepcopy(doc)
        set_dotted(d, key, v)
        parse_scene(d)  # validate every point before running any of them
        docs.append(d)
    name = _scene_name(doc, args.scene)
    reports = [_run(d, text, f"{name}[{key}={v:g}]", args.workers) for d, v in zip(docs, values)]
    series = {"parameter": key, "values": values, "reports": reports}
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(rpt.to_json(series))
    if args.format == "json":
        sys.stdout.write(rpt.to_json(series))
    else:
        idents = list(reports[0]["identities"])
        head = [key] + idents + ["worst top residual", "H1 std"]
        rows = [head]
        for v, r in zip(values, reports):
            tops = [res["levels"][-1]["relative_residual"] for res in r["identities"].values() if res["levels"]]
            tops = [t for t in tops if isinstance(t, float)]
            h_std = r["diagnostics"].get("H_std") or [None]
            rows.append(
                [f"{v:g}"]
                + [r["identities"][i]["status"] for i in idents]
                + [f"{max(tops):.2e}" if tops else "-", f"{h_std[0]:.2e}" if h_std[0] is not None else "-"]
            )
        widths = [max(len(row[c]) for row in rows) for c in range(len(head))]
        for k, row in enumerate(rows):
            print("  ".join(cell.ljust(w) for cell, w in zip(row, widths)).rstrip())
            if k == 0:
                print("  ".join("-" * w for w in widths))
    return max(r["summary"]["exit_code"] for r in reports)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hsminkowski",
        description="Numerical verification of Hsiung-Minkowski type integral identities.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("catalog", help="list metrics, surfaces, fields and identities")
    p.add_argument("--identities", action="store_true", help="list identities with their gates")
    p.add_argument("--json", action="store_true", help="machine-readable schema")
    p.set_defaults(func=cmd_catalog)

    def run_flags(p):
        p.add_argument("scene", help="scene file (TOML)")
        p.add_argument("--levels", help="comma-separated node counts per axis, e.g. 16,32,64 or 8x16,16x32")
        p.add_argument("--tol", type=float, help="override the identity pass tolerance")
        p.add_argument("--out", help="write the JSON report here")
        p.add_argument("--format", choices=("table", "json"), default="table")
        p.add_argument("--seed", type=int, help="override the field seed")
        p.add_argument("--flip-normal", action="store_true", help="use the opposite unit normal")
        p.add_argument("--workers", type=int, default=None,
                       help="node-evaluation threads (default: $HSMINKOWSKI_WORKERS or 1)")

    p = sub.add_parser("verify", help="run a convergence sweep on one scene")
    run_flags(p)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("selftest", help="run the invariant battery")
    p.add_argument("--suite", action="append", help="run only this suite (repeatable)")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_selftest)

    p = sub.add_parser("sweep", help="re-run verify across a parameter range")
    run_flags(p)
    p.add_argument("--param", required=True, help="dotted.key=a:b:steps, e.g. surface.params.eps=0:0.3:4")
    p.set_defaults(func=cmd_sweep)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    except GeometryError as exc:
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())

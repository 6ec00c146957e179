"""Machine-readable (JSON) and aligned-table renderings of a residual report.

Everything that depends on the clock or on the worker count lives under the
top-level ``timing`` key, so two runs of the same scene produce identical
JSON once that key is dropped.
"""

from __future__ import annotations

import json
import math
import platform
import sys

import numpy as np

from . import __version__
from .identities import ResidualReport, gates_for

SCHEMA = "hsminkowski.report/1"


def _clean(value):
    """JSON-safe copy: numpy scalars to Python, non-finite floats to strings."""
    if isinstance(value, dict):
        return {str(k): _clean(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_clean(v) for v in value]
    if isinstance(value, (np.bool_, bool)):
        return bool(value)
    if isinstance(value, (np.integer,)):
        return int(value)
    if isinstance(value, (np.floating, float)):
        v = float(value)
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return v
    return value


def report_dict(report: ResidualReport, scene_text: str | None = None) -> dict:
    identities = {}
    for ident, res in report.results.items():
        identities[ident] = {
            "status": res.status,
            "tolerance": res.tolerance,
            "gates": gates_for(ident),
            "gate_error": res.gate_error or None,
            "decreasing": res.decreasing,
            "non_decreasing_flag": res.non_decreasing_flag,
            "levels": [
                {
                    "nodes": lv.nodes,
                    "value": lv.value,
                    "normalization": lv.normalization,
                    "relative_residual": lv.relative,
                    "observed_order": lv.order,
                }
                for lv in res.levels
            ],
        }
    doc = {
        "schema": SCHEMA,
        "scene": {
            "name": report.scene.name,
            "parsed": report.scene.to_dict(),
            "echo": scene_text,
        },
        "seeds": {"field": report.scene.field.get("seed")},
        "identities": identities,
        "diagnostics": report.diagnostics,
        "classification": report.classification,
        "summary": {
            "passed": report.passed,
            "exit_code": exit_code(report),
            "counts": {
                status: sum(1 for r in report.results.values() if r.status == status)
                for status in ("pass", "fail", "degenerate", "gate_violation")
            },
        },
        "environment": {
            "package_version": __version__,
            "python": platform.python_version(),
            "numpy": np.__version__,
            "platform": sys.platform,
        },
        "timing": {
            "wall_time_s": report.metadata.get("wall_time_s"),
            "workers": report.metadata.get("workers"),
        },
    }
    return _clean(doc)


def exit_code(report: ResidualReport) -> int:
    """0 when nothing failed; degenerate identities (0 = 0) do not count as failures."""
    bad = any(r.status in ("fail", "gate_violation") for r in report.results.values())
    return 1 if bad else 0


def to_json(doc: dict) -> str:
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def strip_timing(doc: dict) -> dict:
    return {k: v for k, v in doc.items() if k != "timing"}


def _fmt(v, spec=".2e"):
    if v is None:
        return "-"
    if isinstance(v, str):
        return v
    return format(v, spec)


def format_table(doc: dict) -> str:
    rows = [("identity", "status", "tol", "nodes", "value", "normalization", "relative", "order")]
    for ident, res in doc["identities"].items():
        levels = res["levels"] or [None]
        for k, lv in enumerate(levels):
            head = (ident, res["status"], _fmt(res["tolerance"], ".0e")) if k == 0 else ("", "", "")
            if lv is None:
                rows.append(head + ("-", "-", "-", "-", "-"))
                continue
            order = lv["observed_order"]
            rows.append(
                head
                + (
                    "x".join(str(m) for m in lv["nodes"]),
                    _fmt(lv["value"], ".3e"),
                    _fmt(lv["normalization"], ".3e"),
                    _fmt(lv["relative_residual"]),
                    _fmt(order, ".2f") if not isinstance(order, str) else order,
                )
            )
    widths = [max(len(r[c]) for r in rows) for c in range(len(rows[0]))]
    lines = [f"scene: {doc['scene']['name']}"]
    for k, r in enumerate(rows):
        lines.append("  ".join(cell.ljust(w) for cell, w in zip(r, widths)).rstrip())
        if k == 0:
            lines.append("  ".join("-" * w for w in widths))
    for ident, res in doc["identities"].items():
        if res["gate_error"]:
            lines.append(res["gate_error"])
        if res["non_decreasing_flag"]:
            lines.append(f"warning: {ident} residuals did not decrease between some levels")
    diag = doc["diagnostics"]
    gates = diag.get("gates", {})
    lines.append(
        "gates: "
        + ", ".join(f"{k}={_fmt(v)}" for k, v in sorted(gates.items()))
    )
    defects = [f"{k}={_fmt(v)}" for k, v in sorted(diag.items()) if isinstance(v, float)]
    if defects:
        lines.append("defects: " + ", ".join(defects))
    cls = doc.get("classification")
    if cls:
        lines.append(
            f"classifier: case={cls['case']} conclusion_holds={cls['conclusion_holds']} "
            f"int_f={_fmt(cls['integral_f'])} int_p_nu={_fmt(cls['integral_p_nu'])} "
            f"umbilicity_rhs_mean={_fmt(cls['umbilicity_rhs_mean'])}"
        )
    c = doc["summary"]["counts"]
    lines.append(
        f"summary: {c['pass']} pass, {c['fail']} fail, {c['degenerate']} degenerate, "
        f"{c['gate_violation']} gate violation(s)"
    )
    return "\n".join(lines) + "\n"

"""Integral identities for closed hypersurfaces, evaluated by quadrature.

Each identity is a list of pointwise terms whose sum, integrated against the
area density, must vanish.  The relative residual of an identity is
``|integral of sum| / integral of sum of |terms|``.

Identity families
-----------------
GEN0..GEN2   any vector field P
POS0..POS2   position fields (Lie term replaced by (n - i) f binom(n, i) H_i)
EIN1, EIN2   position fields on Einstein ambients
CSC_i        position fields on constant-curvature ambients, 0 <= i <= n - 1
CSC2X        degree-two identity on constant-curvature ambients
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from math import comb
from typing import Optional

import numpy as np

from .errors import ConfigError, DegenerateScene, GateViolation
from .fields import field_eval
from .geometry import einsum, einstein_defect, scalar_curvature, space_form_tensor
from .hypersurface import evaluate, lie_term_pullback, traces_from_tensors
from .quadrature import map_chunks, pairwise_sum, tensor_grid, worker_count
from .scene import Scene

DEGENERATE = 1e-14
DEGENERATE_REL = 1e-12  # normalization below this fraction of the natural scale is round-off
SATURATED = 5e-14
FAMILIES = ("GEN0", "GEN1", "GEN2", "POS0", "POS1", "POS2", "EIN1", "EIN2", "CSC2X")
GATES = {
    "GEN": [],
    "POS": ["position"],
    "EIN": ["position", "einstein"],
    "CSC": ["position", "constant_curvature"],
}


def gates_for(identity: str) -> list:
    return GATES[identity[:3]]


def identity_ids(n: int) -> list:
    return list(FAMILIES[:8]) + [f"CSC_{i}" for i in range(n)] + ["CSC2X"]


# -- pointwise data ------------------------------------------------------


@dataclass
class NodeData:
    """Scalar fields on a batch of nodes, everything an integrand needs."""

    n: int
    dA: np.ndarray
    f: np.ndarray
    pnu: np.ndarray
    ric_pn: np.ndarray
    ric_nn: np.ndarray
    H: np.ndarray  # (..., n + 1)
    t1: np.ndarray
    t2: np.ndarray
    t3: np.ndarray
    df_nu: np.ndarray
    lie: list  # L_0, L_1, L_2 (zero where i >= n)
    principal: np.ndarray
    sym_defect: np.ndarray
    einstein: np.ndarray
    scal: np.ndarray
    csc_dev: np.ndarray  # max |R - model(c_local)|
    conformal: np.ndarray
    magnitude: np.ndarray  # (|P| + |f|, 1 + |A| + |Ric|) building-block sizes

    def Hk(self, k):
        if k > self.n:
            return np.zeros_like(self.f)
        return self.H[..., k]


def node_data(manifold, immersion, fld, u, flip=False, lie_path="combinatorial") -> NodeData:
    s = evaluate(immersion, manifold, u, flip)
    fr, sh, curv, g = s.frame, s.shape, s.curvature, s.jet.g
    n = immersion.n
    d = manifold.dim
    fj = field_eval(fld, manifold, fr.x, s.jet, curv.gamma, curv.dgamma)
    nu, E, A, P = fr.nu, fr.E, sh.A, fj.P
    pnu = einsum("...a,...ab,...b->...", P, g, nu)
    ric_pn = einsum("...ab,...a,...b->...", curv.ricci, P, nu)
    ric_nn = einsum("...ab,...a,...b->...", curv.ricci, nu, nu)
    t1, t2, t3 = traces_from_tensors(g, curv.riemann_lowered, curv.ricci, nu, E, A, P)
    # tangential block of nabla P in the frame: S[k, b] = <nabla_{E_b} P, E_k>
    S = einsum("...ak,...ab,...bc,...cm->...km", E, g, fj.nablaP, E)
    lie = [lie_term_pullback(S, A, i, lie_path) if i < n else np.zeros_like(pnu) for i in range(3)]

    scal = scalar_curvature(g, curv.ricci)
    c_local = scal / (d * (d - 1))
    csc_dev = np.max(
        np.abs(curv.riemann_lowered - space_form_tensor(g, c_local[..., None, None, None, None])),
        axis=(-1, -2, -3, -4),
    )
    F = np.linalg.cholesky(g)
    M = einsum("...ba,...bc,...cd->...ad", F, fj.nablaP, np.linalg.inv(np.swapaxes(F, -1, -2)))
    conformal = np.max(
        np.abs(M - np.trace(M, axis1=-1, axis2=-2)[..., None, None] / d * np.eye(d)), axis=(-1, -2)
    )
    ginv = np.linalg.inv(g)
    p_norm = np.sqrt(einsum("...a,...ab,...b->...", P, g, P))
    ric_mixed = ginv @ curv.ricci
    ric_norm = np.sqrt(np.abs(einsum("...ab,...ba->...", ric_mixed, ric_mixed)))
    a_norm = np.sqrt(np.sum(A * A, axis=(-1, -2)))
    magnitude = np.stack([p_norm + np.abs(fj.f), 1.0 + a_norm + ric_norm], axis=-1)
    return NodeData(
        n=n,
        dA=fr.area_density,
        f=fj.f,
        pnu=pnu,
        ric_pn=ric_pn,
        ric_nn=ric_nn,
        H=sh.H,
        t1=t1,
        t2=t2,
        t3=t3,
        df_nu=einsum("...a,...a->...", fj.df, nu),
        lie=lie,
        principal=sh.principal,
        sym_defect=sh.sym_defect,
        einstein=einstein_defect(g, curv.ricci),
        scal=scal,
        csc_dev=csc_dev,
        conformal=conformal,
        magnitude=magnitude,
    )


def position_lie(nd: NodeData, i: int):
    """Lie term of a position field: ``(n - i) f binom(n, i) H_i``."""
    n = nd.n
    if i >= n:
        return np.zeros_like(nd.f)
    return (n - i) * nd.f * comb(n, i) * nd.Hk(i)


def terms(identity: str, nd: NodeData) -> list:
    """Pointwise terms of ``identity`` (before the area density)."""
    n = nd.n
    pnu, H = nd.pnu, nd.Hk
    fam = identity[:3]
    if fam in ("GEN", "POS"):
        i = int(identity[3])
        L = nd.lie[i] if fam == "GEN" else position_lie(nd, i)
        if i == 0:
            return [L, -n * pnu * H(1)]
        if i == 1:
            return [L, -2 * comb(n, 2) * pnu * H(2), -nd.ric_pn, pnu * nd.ric_nn]
        return [
            L,
            (pnu * nd.ric_nn - nd.ric_pn) * n * H(1),
            -3 * comb(n, 3) * pnu * H(3),
            pnu * nd.t1,
            nd.t2,
            -nd.t3,
        ]
    if identity == "EIN1":
        return [nd.f * H(1), -pnu * H(2)]
    if identity == "EIN2":
        k = 3 * comb(n, 3)
        return [k * nd.f * H(2), -k * pnu * H(3), pnu * nd.t1, -nd.t3]
    if identity == "CSC2X":
        return [nd.f * H(2), -pnu * H(3)]
    if identity.startswith("CSC_"):
        i = int(identity[4:])
        if not 0 <= i <= n - 1:
            raise ConfigError(f"{identity}: need 0 <= i <= {n - 1}")
        return [nd.f * H(i), -pnu * H(i + 1)]
    raise ConfigError(f"unknown identity {identity!r}")


def degree(identity: str) -> int:
    """Number of curvature-type factors in the highest-order term."""
    if identity[:3] in ("GEN", "POS"):
        return int(identity[3]) + 1
    if identity.startswith("CSC_"):
        return int(identity[4:]) + 1
    return {"EIN1": 2, "EIN2": 3, "CSC2X": 3}[identity]


def scale_density(identity: str, nd: NodeData):
    """Natural size of the integrand; round-off in the terms is a tiny fraction of it."""
    return nd.magnitude[..., 0] * nd.magnitude[..., 1] ** degree(identity) * nd.dA


def degeneracy_floor(scale: float) -> float:
    return max(DEGENERATE, DEGENERATE_REL * scale)


def integrand(identity: str, scene: Scene, u):
    """Pointwise integrand (sum of terms times area density) at parameters ``u``.

    The identity's gates are checked on the same nodes first.
    """
    manifold, immersion, fld = scene.build()
    u = np.atleast_2d(np.asarray(u, dtype=float))
    nd = node_data(manifold, immersion, fld, u, scene.orientation_flip, scene.lie_path)
    check_gates(identity, fld, gate_metrics(nd), scene.tolerances)
    return sum(terms(identity, nd)) * nd.dA


# -- gates ---------------------------------------------------------------


def gate_metrics(nd: NodeData) -> dict:
    c = nd.scal / (nd.n * (nd.n + 1))
    return {
        "conformal_defect": float(np.max(nd.conformal)),
        "einstein_defect": float(np.max(nd.einstein)),
        "curvature_model_residual": float(np.max(nd.csc_dev)),
        "curvature_spread": float(np.max(c) - np.min(c)),
    }


def check_gates(identity: str, fld, metrics: dict, tol: dict) -> None:
    for gate in gates_for(identity):
        if gate == "position":
            if not fld.claims_position:
                raise GateViolation(identity, "position field", "field does not claim to be a position field")
            if metrics["conformal_defect"] > tol["position_gate"]:
                raise GateViolation(
                    identity, "position field", f"conformal-factor defect {metrics['conformal_defect']:.3e}"
                )
        elif gate == "einstein":
            if metrics["einstein_defect"] > tol["einstein_gate"]:
                raise GateViolation(identity, "Einstein defect", f"{metrics['einstein_defect']:.3e}")
        elif gate == "constant_curvature":
            worst = max(metrics["curvature_model_residual"], metrics["curvature_spread"])
            if worst > tol["csc_gate"]:
                raise GateViolation(identity, "constant curvature", f"model residual {worst:.3e}")


# -- quadrature ----------------------------------------------------------


@dataclass
class LevelResult:
    nodes: list
    value: float
    normalization: float
    relative: Optional[float]
    order: object = None  # float, "saturated" or None


@dataclass
class IdentityResult:
    identity: str
    tolerance: float
    status: str = "pending"
    levels: list = field(default_factory=list)
    decreasing: bool = False  # strictly, until both neighbours sit at the round-off floor
    non_decreasing_flag: bool = False
    gate_error: str = ""


@dataclass
class ResidualReport:
    scene: Scene
    results: dict
    diagnostics: dict
    classification: Optional[dict]
    metadata: dict

    @property
    def passed(self) -> bool:
        """True when nothing failed; a degenerate identity (0 = 0) is not a failure."""
        return all(r.status in ("pass", "degenerate") for r in self.results.values())


def _level_pass(scene: Scene, manifold, immersion, fld, counts, identities, workers=None):
    nodes, weights = tensor_grid(immersion.axes, counts)

    def work(chunk_u):
        nd = node_data(manifold, immersion, fld, chunk_u, scene.orientation_flip, scene.lie_path)
        out = {}
        for ident in identities:
            ts = terms(ident, nd)
            out[ident] = (sum(ts) * nd.dA, sum(np.abs(t) for t in ts) * nd.dA, scale_density(ident, nd))
        diag = {
            "sym_defect": np.max(nd.sym_defect),
            "trace_identity": np.max(np.abs(nd.t3 - nd.n * nd.Hk(1) * nd.df_nu)),
            "position_reduction": max(
                float(np.max(np.abs(nd.lie[i] - position_lie(nd, i)))) for i in range(min(3, nd.n))
            ),
            "min_area_density": np.min(nd.dA),
        }
        return out, gate_metrics(nd), diag, nd

    pieces = map_chunks(work, nodes, workers)
    sums = {}
    for ident in identities:
        vals = np.concatenate([p[0][ident][0] for p in pieces]) * weights
        norms = np.concatenate([p[0][ident][1] for p in pieces]) * weights
        scales = np.concatenate([p[0][ident][2] for p in pieces]) * weights
        sums[ident] = (float(pairwise_sum(vals)), float(pairwise_sum(norms)), float(pairwise_sum(scales)))
    metrics = {
        "conformal_defect": max(p[1]["conformal_defect"] for p in pieces),
        "einstein_defect": max(p[1]["einstein_defect"] for p in pieces),
        "curvature_model_residual": max(p[1]["curvature_model_residual"] for p in pieces),
    }
    scal = np.concatenate([p[3].scal for p in pieces])
    d = immersion.n + 1
    cvals = scal / (d * (d - 1))
    metrics["curvature_spread"] = float(np.max(cvals) - np.min(cvals))
    diag = {
        "sym_defect_max": float(max(p[2]["sym_defect"] for p in pieces)),
        "position_field_trace_identity_max": float(max(p[2]["trace_identity"] for p in pieces)),
        "position_reduction_defect_max": float(max(p[2]["position_reduction"] for p in pieces)),
        "min_area_density": float(min(p[2]["min_area_density"] for p in pieces)),
    }
    return sums, metrics, diag, (nodes, weights, [p[3] for p in pieces])


def integrate(scene: Scene, identity: str, level: int, workers=None):
    """``(value, normalization)`` of one identity at one quadrature level."""
    manifold, immersion, fld = scene.build()
    counts = scene.level_counts(immersion.n)
    if not 0 <= level < len(counts):
        raise ConfigError(f"level {level} outside configured range 0..{len(counts) - 1}")
    sums, metrics, _, _ = _level_pass(scene, manifold, immersion, fld, counts[level], [identity], workers)
    check_gates(identity, fld, metrics, scene.tolerances)
    value, norm, scale = sums[identity]
    if norm < degeneracy_floor(scale):
        raise DegenerateScene(
            f"{identity}: normalization {norm:.3e} is round-off (floor {degeneracy_floor(scale):.3e})"
        )
    return value, norm


def observed_order(r0, r1, m0, m1):
    if r0 is None or r1 is None:
        return None
    if r0 <= SATURATED and r1 <= SATURATED:
        return "saturated"
    if r1 <= 0.0 or r0 <= 0.0 or m1 == m0:
        return None
    return math.log(r0 / r1) / math.log(m1 / m0)


def precheck_gates(scene: Scene, manifold, immersion, fld, counts=4):
    """Cheap gate evaluation on a coarse grid; returns ``({identity: error}, metrics)``."""
    _, metrics, _, _ = _level_pass(scene, manifold, immersion, fld, [counts] * immersion.n, [], 1)
    errors = {}
    for ident in scene.identities:
        try:
            check_gates(ident, fld, metrics, scene.tolerances)
        except GateViolation as exc:
            errors[ident] = str(exc)
    return errors, metrics


def convergence_sweep(scene: Scene, workers=None, classify: bool = True) -> ResidualReport:
    t0 = time.perf_counter()
    manifold, immersion, fld = scene.build()
    counts = scene.level_counts(immersion.n)
    results = {ident: IdentityResult(ident, scene.tolerance(ident)) for ident in scene.identities}

    pre, pre_metrics = precheck_gates(scene, manifold, immersion, fld)
    for ident, msg in pre.items():
        results[ident].status = "gate_violation"
        results[ident].gate_error = msg
    active = [i for i in scene.identities if i not in pre]

    diagnostics = {}
    gate_log = []
    last = None
    for c in counts if active else []:
        sums, metrics, diag, last = _level_pass(scene, manifold, immersion, fld, c, active, workers)
        gate_log.append(metrics)
        for k, v in diag.items():
            prev = diagnostics.get(k)
            better = min if k == "min_area_density" else max
            diagnostics[k] = v if prev is None else better(prev, v)
        for ident in active:
            value, norm, scale = sums[ident]
            rel = abs(value) / norm if norm >= degeneracy_floor(scale) else None
            results[ident].levels.append(LevelResult(list(c), value, norm, rel))
            try:
                check_gates(ident, fld, metrics, scene.tolerances)
            except GateViolation as exc:
                results[ident].status = "gate_violation"
                results[ident].gate_error = str(exc)
    diagnostics["gates"] = {
        k: max(m[k] for m in gate_log or [pre_metrics])
        for k in ("conformal_defect", "einstein_defect", "curvature_model_residual", "curvature_spread")
    }

    for ident in active:
        res = results[ident]
        levels = res.levels
        for a, b in zip(levels, levels[1:]):
            m0 = float(np.prod(a.nodes)) ** (1.0 / len(a.nodes))
            m1 = float(np.prod(b.nodes)) ** (1.0 / len(b.nodes))
            b.order = observed_order(a.relative, b.relative, m0, m1)
        rels = [lv.relative for lv in levels]
        if any(r is None for r in rels):
            if res.status != "gate_violation":
                res.status = "degenerate"
            continue
        res.decreasing = all(b < a or (a <= SATURATED and b <= SATURATED) for a, b in zip(rels, rels[1:]))
        res.non_decreasing_flag = any(
            b >= a and not (a <= SATURATED and b <= SATURATED) for a, b in zip(rels, rels[1:])
        )
        if res.status != "gate_violation":
            res.status = "pass" if rels[-1] <= res.tolerance else "fail"

    if last is not None:
        _, w, nds = last
        dA = np.concatenate([nd.dA for nd in nds]) * w
        H = np.concatenate([nd.H for nd in nds])
        diagnostics["H_std"] = [_weighted_std(H[:, k], dA)[0] for k in range(1, H.shape[1])]
        diagnostics["H_mean"] = [_weighted_std(H[:, k], dA)[1] for k in range(1, H.shape[1])]

    classification = None
    if classify and fld.claims_position and last is not None:
        metrics = gate_log[-1]
        if metrics["einstein_defect"] <= scene.tolerances["einstein_gate"] and (
            metrics["conformal_defect"] <= scene.tolerances["position_gate"]
        ):
            classification = classify_from_nodes(last, scene.tolerances)

    metadata = {
        "levels": counts,
        "seed": scene.field.get("seed"),
        "wall_time_s": time.perf_counter() - t0,
        "workers": worker_count() if workers is None else workers,
    }
    return ResidualReport(scene, results, diagnostics, classification, metadata)


# -- umbilicity and the constant-curvature classifier ---------------------


def umbilicity_defect(A):
    """``(lhs, rhs)`` with ``lhs = (n-1) sum a_i^2 - 2 sum_{i<j} a_i a_j`` and
    ``rhs = sum_{i<j} (a_i - a_j)^2`` over the eigenvalues of symmetric ``A``."""
    a = np.linalg.eigvalsh(np.asarray(A, dtype=float))
    n = a.shape[-1]
    s1 = np.sum(a, axis=-1)
    s2 = np.sum(a * a, axis=-1)
    pair = 0.5 * (s1 * s1 - s2)
    lhs = (n - 1) * s2 - 2.0 * pair
    iu = np.triu_indices(n, 1)
    diffs = a[..., iu[0]] - a[..., iu[1]]
    rhs = np.sum(diffs * diffs, axis=-1)
    return lhs, rhs


def _weighted_std(values, w):
    mean = np.sum(w * values) / np.sum(w)
    return float(np.sqrt(np.sum(w * (values - mean) ** 2) / np.sum(w))), float(mean)


def classify_from_nodes(level_data, tol: dict) -> dict:
    nodes, weights, nds = level_data
    cat = lambda attr: np.concatenate([getattr(nd, attr) for nd in nds])  # noqa: E731
    dA = cat("dA") * weights
    f, pnu = cat("f"), cat("pnu")
    H = np.concatenate([nd.H for nd in nds])
    principal = np.concatenate([nd.principal for nd in nds])
    int_f = float(pairwise_sum(f * dA))
    int_pnu = float(pairwise_sum(pnu * dA))
    abs_f = float(pairwise_sum(np.abs(f) * dA))
    abs_pnu = float(pairwise_sum(np.abs(pnu) * dA))
    std_h1, mean_h1 = _weighted_std(H[:, 1], dA)
    std_h2, mean_h2 = _weighted_std(H[:, 2], dA) if H.shape[1] > 2 else (0.0, 0.0)
    n = principal.shape[-1]
    iu = np.triu_indices(n, 1)
    diffs = principal[:, iu[0]] - principal[:, iu[1]]
    umb = np.sum(diffs * diffs, axis=-1)
    umb_mean = float(pairwise_sum(umb * dA) / pairwise_sum(dA))
    h_gap = float(np.max(np.abs(H[:, 1] ** 2 - (H[:, 2] if H.shape[1] > 2 else 0.0))))
    max_a = float(np.max(np.abs(principal)))
    f_zero = abs(int_f) <= tol["zero"] * max(abs_f, 1e-300)
    pnu_zero = abs(int_pnu) <= tol["zero"] * max(abs_pnu, 1e-300)

    out = {
        "integral_f": int_f,
        "integral_p_nu": int_pnu,
        "H1_mean": mean_h1,
        "H2_mean": mean_h2,
        "H1_std": std_h1,
        "H2_std": std_h2,
        "umbilicity_rhs_mean": umb_mean,
        "H1_squared_minus_H2_max": h_gap,
        "max_abs_principal": max_a,
    }
    if std_h1 > tol["const"] or std_h2 > tol["const"]:
        out.update(case="NotConstant", conclusion_holds=None)
    elif not f_zero:
        holds = umb_mean <= tol["umbilic"] and h_gap <= tol["umbilic"] and abs(mean_h1) > tol["umbilic"]
        out.update(case="ii", conclusion_holds=bool(holds))
    elif not pnu_zero:
        out.update(case="i", conclusion_holds=bool(max_a <= tol["umbilic"]))
    else:
        out.update(case="NotCase", conclusion_holds=None)
    return out


def classify_constant_curvature_case(scene: Scene, level: int = -1, workers=None) -> dict:
    manifold, immersion, fld = scene.build()
    counts = scene.level_counts(immersion.n)[level]
    _, metrics, _, data = _level_pass(scene, manifold, immersion, fld, counts, [], workers)
    check_gates("EIN1", fld, metrics, scene.tolerances)
    return classify_from_nodes(data, scene.tolerances)

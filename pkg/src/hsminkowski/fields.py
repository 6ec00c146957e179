"""Vector fields on a chart with covariant derivatives and conformal data.

``nablaP[..., a, b] = d_b P^a + Gamma^a_{bc} P^c`` so that ``nabla_X P = nablaP @ X``.
The conformal factor is always ``f = tr(nablaP) / d``; a field is a position
field exactly when ``nablaP = f I``.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from . import jets
from .errors import ConfigError, NotAPositionField
from .geometry import (
    Manifold,
    MetricJet,
    christoffel,
    curvature_from_jet,
    einsum,
    metric_eval,
    orthonormal_frame,
)
from .jets import Expression, Jet

DF_ZERO = 1e-10


@dataclass(frozen=True)
class Field:
    kind: str
    components: Callable  # coordinate jets -> list of d components
    claims_position: bool = False
    params: dict = field(default_factory=dict)
    seed: Optional[int] = None

    def __hash__(self):
        return hash((self.kind, self.seed, repr(sorted(self.params.items()))))


@dataclass(frozen=True)
class FieldJet:
    P: np.ndarray
    nablaP: np.ndarray
    f: np.ndarray
    df: np.ndarray


def position_field(manifold: Manifold) -> Field:
    if manifold.position is None:
        raise ConfigError(f"manifold {manifold.catalog_id} has no catalog position field")
    return Field("position_catalog", manifold.position, claims_position=True)


def expression_field(components, dim: int, claims_position: bool = False) -> Field:
    names = [f"x{i}" for i in range(dim)]
    comps = [str(c) for c in components]
    if len(comps) != dim:
        raise ConfigError(f"coordinate_expression: need {dim} components, got {len(comps)}")
    exprs = [Expression(c, names) for c in comps]
    return Field(
        "coordinate_expression",
        lambda xs: [e(*xs) for e in exprs],
        claims_position=bool(claims_position),
        params={"components": comps, "claims_position": bool(claims_position)},
    )


def _polynomial_inputs(manifold: Manifold | None, dim: int, c0):
    """Variables the random polynomial is built from.

    Cartesian charts use ``x - center``.  Polar charts over a flat-torus fibre
    use ``r - center[0]`` and ``cos``/``sin`` of every angle, so the field is
    periodic and hence a smooth field on the closed manifold.
    """
    if manifold is None or manifold.chart == "cartesian":
        return dim, lambda xs: [xi - c for xi, c in zip(xs, c0)]
    if manifold.fiber == "torus":
        def inputs(xs):
            out = [xs[0] - c0[0]]
            for t in xs[1:]:
                out += [jets.cos(t), jets.sin(t)]
            return out
        return 2 * dim - 1, inputs
    raise ConfigError(
        f"random_polynomial: chart of {manifold.catalog_id} has singular angle coordinates; "
        "use a Cartesian or torus-fibre chart"
    )


def random_polynomial_field(dim: int, seed: int, degree: int = 2, scale: float = 1.0,
                            center=None, manifold: Manifold | None = None) -> Field:
    """Polynomial components with coefficients uniform in ``[-scale, scale]``.

    Monomials are taken in ``x - center`` so the field stays tame over charts
    that are far from the origin (e.g. polar radius).
    """
    rng = np.random.default_rng(seed)
    c0 = np.zeros(dim) if center is None else np.asarray(center, dtype=float)
    if c0.shape != (dim,):
        raise ConfigError(f"random_polynomial: center needs {dim} entries")
    nvar, inputs = _polynomial_inputs(manifold, dim, c0)
    exps = [
        e for total in range(degree + 1)
        for e in itertools.product(range(total + 1), repeat=nvar) if sum(e) == total
    ]
    coefs = rng.uniform(-scale, scale, size=(dim, len(exps)))

    def components(xs):
        shifted = inputs(xs)
        powers = [[1.0] + [None] * degree for _ in range(nvar)]
        for i in range(nvar):
            for p in range(1, degree + 1):
                powers[i][p] = shifted[i] if p == 1 else powers[i][p - 1] * shifted[i]
        monos = []
        for e in exps:
            m = 1.0
            for i, p in enumerate(e):
                if p:
                    m = powers[i][p] * m
            monos.append(m)
        out = []
        for a in range(dim):
            acc = 0.0
            for cf, m in zip(coefs[a], monos):
                acc = m * cf + acc
            out.append(acc)
        return out

    params = {"degree": int(degree), "scale": float(scale)}
    if center is not None:
        params["center"] = [float(v) for v in c0]
    return Field("random_polynomial", components, False, params, int(seed))


def field_eval(fld: Field, manifold: Manifold, x, jet: MetricJet | None = None,
               gamma=None, dgamma=None) -> FieldJet:
    x = np.asarray(x, dtype=float)
    if jet is None:
        jet = metric_eval(manifold, x)
    if gamma is None or dgamma is None:
        gamma, dgamma = christoffel(jet)
    d = manifold.dim
    xs = Jet.variables(x)
    P, dP, ddP = jets.stack(fld.components(xs), x)
    # dP[a, b] = d_b P^a, ddP[a, b, c] = d_b d_c P^a
    nablaP = dP + einsum("...abc,...c->...ab", gamma, P)
    tr = np.trace(nablaP, axis1=-1, axis2=-2)
    dtr = (
        einsum("...aae->...e", ddP)
        + einsum("...aace,...c->...e", dgamma, P)
        + einsum("...aac,...ce->...e", gamma, dP)
    )
    return FieldJet(P, nablaP, tr / d, dtr / d)


def _frame_operator(g, op):
    """Matrix of the endomorphism ``op`` in the orthonormal frame of ``g``."""
    F = orthonormal_frame(g)
    return np.linalg.solve(F, op @ F)


def conformal_factor_defect(fld: Field, manifold: Manifold, x):
    x = np.asarray(x, dtype=float)
    jet = metric_eval(manifold, x)
    fj = field_eval(fld, manifold, x, jet)
    M = _frame_operator(jet.g, fj.nablaP)
    d = manifold.dim
    tr = np.trace(M, axis1=-1, axis2=-2)
    return np.max(np.abs(M - tr[..., None, None] / d * np.eye(d)), axis=(-1, -2))


@dataclass(frozen=True)
class PositionResiduals:
    skew: np.ndarray  # (a) antisymmetric part of nablaP
    traceless_sym: np.ndarray  # (b) traceless symmetric part
    curvature_p: np.ndarray  # (c) R(X,Y)P - (df(X)Y - df(Y)X)
    ricci_p: np.ndarray  # (d) Ric(P,v) + n df(v)
    flat_p: np.ndarray  # (e) R(X,Y)P where df vanishes, else 0

    def max(self) -> float:
        return float(
            max(np.max(self.skew), np.max(self.traceless_sym), np.max(self.curvature_p),
                np.max(self.ricci_p), np.max(self.flat_p))
        )


def position_identity_residuals(fld: Field, manifold: Manifold, x, v) -> PositionResiduals:
    """Pointwise residuals of the algebraic identities satisfied by position fields."""
    if not fld.claims_position:
        raise NotAPositionField(f"field of kind {fld.kind!r} does not claim to be a position field")
    x = np.asarray(x, dtype=float)
    v = np.asarray(v, dtype=float)
    jet = metric_eval(manifold, x)
    curv = curvature_from_jet(jet)
    fj = field_eval(fld, manifold, x, jet, curv.gamma, curv.dgamma)
    g = jet.g
    d = manifold.dim
    n = d - 1
    F = orthonormal_frame(g)
    M = np.linalg.solve(F, fj.nablaP @ F)
    sym = 0.5 * (M + np.swapaxes(M, -1, -2))
    tr = np.trace(M, axis1=-1, axis2=-2)
    skew = np.max(np.abs(0.5 * (M - np.swapaxes(M, -1, -2))), axis=(-1, -2))
    tls = np.max(np.abs(sym - tr[..., None, None] / d * np.eye(d)), axis=(-1, -2))

    # RP[.., a, i, j] = components of R(F_i, F_j) P
    RP = einsum("...acIJ,...c,...Ii,...Jj->...aij", curv.riemann_up, fj.P, F, F)
    dfF = einsum("...a,...ai->...i", fj.df, F)
    model = dfF[..., None, :, None] * F[..., :, None, :] - dfF[..., None, None, :] * F[..., :, :, None]
    diff = RP - model
    norm = np.sqrt(einsum("...aij,...ab,...bij->...ij", diff, g, diff))
    curv_res = np.max(norm, axis=(-1, -2))

    ric_pv = einsum("...ab,...a,...b->...", curv.ricci, fj.P, v)
    ric_res = np.abs(ric_pv + n * einsum("...a,...a->...", fj.df, v))

    ginv = np.linalg.inv(g)
    df_norm = np.sqrt(einsum("...a,...ab,...b->...", fj.df, ginv, fj.df))
    rp_norm = np.max(np.sqrt(einsum("...aij,...ab,...bij->...ij", RP, g, RP)), axis=(-1, -2))
    flat = np.where(df_norm <= DF_ZERO, rp_norm, 0.0)
    return PositionResiduals(skew, tls, curv_res, ric_res, flat)


FIELD_KINDS = {
    "position_catalog": {"params": {}, "description": "the manifold's catalog position field"},
    "coordinate_expression": {
        "params": {"components": "list of expressions in x0..", "claims_position": "bool"},
        "description": "arbitrary field given by chart-component expressions",
    },
    "random_polynomial": {
        "params": {"degree": "int (default 2)", "scale": "float (default 1)", "center": "optional list"},
        "description": "seeded random polynomial field (needs seed)",
    },
}


def make_field(kind: str, params: dict | None, seed, manifold: Manifold) -> Field:
    params = dict(params or {})
    if kind == "position_catalog":
        if params:
            raise ConfigError(f"field position_catalog takes no params, got {sorted(params)}")
        return position_field(manifold)
    if kind == "coordinate_expression":
        unknown = set(params) - {"components", "claims_position"}
        if unknown or "components" not in params:
            raise ConfigError("field coordinate_expression: params are components, claims_position")
        return expression_field(params["components"], manifold.dim, params.get("claims_position", False))
    if kind == "random_polynomial":
        unknown = set(params) - {"degree", "scale", "center"}
        if unknown:
            raise ConfigError(f"field random_polynomial: unknown params {sorted(unknown)}")
        if seed is None:
            raise ConfigError("field random_polynomial requires a seed")
        return random_polynomial_field(manifold.dim, int(seed), manifold=manifold, **params)
    raise ConfigError(f"unknown field kind {kind!r}; known: {', '.join(FIELD_KINDS)}")

"""Closed parametric hypersurfaces: frames, shape operator, mean curvatures.

The shape operator follows ``A X = nabla_X nu``.  It is obtained from the
second fundamental form ``<A d_b, d_c> = -<nu, d_b d_c iota + Gamma(d_b iota, d_c iota)>``
which needs only the second parameter derivatives of the immersion, so no
numerical differentiation of the normal field is involved.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from math import comb
from typing import Callable

import numpy as np

from . import jets
from .errors import ConfigError, IndexOutOfRange, RankDeficient, SymmetryDefectTooLarge
from .geometry import CurvatureData, Manifold, MetricJet, curvature_from_jet, einsum, metric_eval
from .jets import Expression, Jet

EPS_RANK = 1e-12
SYM_ABORT = 1e-4
ORTHO_TOL = 1e-12


@dataclass(frozen=True)
class Axis:
    lo: float
    hi: float
    periodic: bool


@dataclass(frozen=True)
class Immersion:
    n: int
    axes: tuple
    map: Callable  # parameter jets -> d chart-coordinate jets
    surface_id: str
    params: dict = field(default_factory=dict)

    def __hash__(self):
        return hash((self.surface_id, repr(sorted(self.params.items()))))


@dataclass(frozen=True)
class SurfaceFrameData:
    x: np.ndarray
    J: np.ndarray  # [a, b] = d_b iota^a
    g_ind: np.ndarray
    E: np.ndarray  # [a, k] = component a of E_k
    nu: np.ndarray
    area_density: np.ndarray


@dataclass(frozen=True)
class ShapeData:
    A: np.ndarray  # [k, b] = <nabla_{E_b} nu, E_k>
    sym_defect: np.ndarray
    principal: np.ndarray
    H: np.ndarray  # H_0 .. H_n
    T: list  # T_0 .. T_{n-1}


@dataclass(frozen=True)
class SurfaceSample:
    """Everything the identities need at a batch of parameter points."""

    u: np.ndarray
    frame: SurfaceFrameData
    shape: ShapeData
    jet: MetricJet
    curvature: CurvatureData
    K: np.ndarray  # [a, b, c] = d_b d_c iota^a
    C: np.ndarray  # E = J C


# -- symmetric functions -------------------------------------------------


def elementary_symmetric(values):
    """``e_0 .. e_n`` of the trailing axis of ``values``."""
    values = np.asarray(values, dtype=float)
    n = values.shape[-1]
    e = [np.ones(values.shape[:-1])] + [np.zeros(values.shape[:-1]) for _ in range(n)]
    for j in range(n):
        a = values[..., j]
        for k in range(j + 1, 0, -1):
            e[k] = e[k] + a * e[k - 1]
    return np.stack(e, axis=-1)


def mean_curvatures(principal):
    """``H_0 .. H_n`` with ``binom(n, i) H_i = e_i(principal)``."""
    principal = np.asarray(principal, dtype=float)
    n = principal.shape[-1]
    e = elementary_symmetric(principal)
    return e / np.array([comb(n, i) for i in range(n + 1)], dtype=float)


def charpoly_symmetric(A):
    """``e_0 .. e_n`` of the eigenvalues of ``A`` from power traces (Newton's identities)."""
    A = np.asarray(A, dtype=float)
    n = A.shape[-1]
    p = []
    Ak = A
    for _ in range(n):
        p.append(np.trace(Ak, axis1=-1, axis2=-2))
        Ak = Ak @ A
    e = [np.ones(A.shape[:-2])]
    for k in range(1, n + 1):
        s = np.zeros(A.shape[:-2])
        for j in range(1, k + 1):
            s = s + (-1) ** (j - 1) * e[k - j] * p[j - 1]
        e.append(s / k)
    return np.stack(e, axis=-1)


def newton_transformations(A, sigma=None):
    """``T_0 .. T_{n-1}`` by ``T_i = sigma_i I - A T_{i-1}``."""
    A = np.asarray(A, dtype=float)
    n = A.shape[-1]
    if sigma is None:
        sigma = charpoly_symmetric(A)
    eye = np.broadcast_to(np.eye(n), A.shape)
    T = [np.array(eye)]
    for i in range(1, n):
        T.append(sigma[..., i, None, None] * eye - A @ T[-1])
    return T


# -- the pulled-back Lie term --------------------------------------------


def lie_term_pullback(S, A, i: int, path: str = "combinatorial"):
    """Pulled-back Lie-derivative term, per unit volume of ``N``.

    ``combinatorial``: sum over ``|K| = i`` and ``k`` not in ``K`` of the
    principal minor on ``K + {k}`` whose rows in ``K`` come from ``A`` and whose
    row ``k`` comes from ``S``.  ``trace``: ``tr(T_i S)``.
    """
    S = np.asarray(S, dtype=float)
    A = np.asarray(A, dtype=float)
    n = A.shape[-1]
    if not 0 <= i <= n - 1:
        raise IndexOutOfRange(f"lie_term_pullback: need 0 <= i <= {n - 1}, got {i}")
    if path == "trace":
        T = newton_transformations(A)[i]
        return einsum("...ab,...ba->...", T, S)
    if path != "combinatorial":
        raise ValueError(f"unknown lie-term path {path!r}")
    batch = np.broadcast_shapes(S.shape[:-2], A.shape[:-2])
    total = np.zeros(batch)
    for K in itertools.combinations(range(n), i):
        for k in range(n):
            if k in K:
                continue
            idx = sorted(K + (k,))
            rows = [S[..., r, idx] if r == k else A[..., r, idx] for r in idx]
            rows = np.broadcast_arrays(*rows)
            total = total + np.linalg.det(np.stack(rows, axis=-2))
    return total


# -- built-in immersions -------------------------------------------------


def hyperspherical(us):
    """Unit vector in ``R^{m+1}`` from angles ``(theta_1..theta_{m-1}, phi)``."""
    out = []
    s = 1.0
    for t in us[:-1]:
        out.append(s * jets.cos(t))
        s = s * jets.sin(t)
    out.append(s * jets.cos(us[-1]))
    out.append(s * jets.sin(us[-1]))
    return out


def _sphere_axes(m):
    return tuple([Axis(0.0, np.pi, False)] * (m - 1) + [Axis(0.0, 2 * np.pi, True)])


def _fiber_axes(manifold: Manifold):
    m = manifold.dim - 1
    if manifold.fiber == "sphere":
        return _sphere_axes(m)
    if manifold.fiber == "torus":
        return tuple([Axis(0.0, 2 * np.pi, True)] * m)
    if manifold.fiber == "s2xs2":
        return (Axis(0, np.pi, False), Axis(0, 2 * np.pi, True), Axis(0, np.pi, False),
                Axis(0, 2 * np.pi, True))
    raise ConfigError(f"manifold {manifold.catalog_id} has no fibre parametrization")


def _fiber_embedding(manifold: Manifold, us):
    if manifold.chart == "cartesian" or manifold.fiber == "sphere":
        return hyperspherical(us)
    if manifold.fiber == "torus":
        out = []
        for t in us:
            out += [jets.cos(t), jets.sin(t)]
        return out
    if manifold.fiber == "s2xs2":
        return hyperspherical(us[:2]) + hyperspherical(us[2:])
    raise ConfigError(f"manifold {manifold.catalog_id} has no fibre embedding")


def _w_count(manifold: Manifold):
    n = manifold.dim - 1
    if manifold.chart == "cartesian" or manifold.fiber == "sphere":
        return n + 1
    if manifold.fiber == "torus":
        return 2 * n
    return 6


def default_perturbation(manifold: Manifold) -> str:
    m = _w_count(manifold)
    h = "w0**3 + w0*w1 - w1**2"
    if m >= 3:
        h += " + 0.5*w2"
    if m >= 4:
        h += " - 0.3*w3*w0"
    if m >= 5:
        h += " + 0.2*w4**2"
    return h


def _radial_surface(manifold: Manifold, rho, eps, h, surface_id, params):
    n = manifold.dim - 1
    if manifold.chart_radius is None:
        raise ConfigError(f"{surface_id}: manifold {manifold.catalog_id} has no radial structure")
    if not rho > 0:
        raise ConfigError(f"{surface_id}: rho must be positive, got {rho}")
    names = [f"u{i}" for i in range(n)] + [f"w{i}" for i in range(_w_count(manifold))]
    h_expr = Expression(h, names) if eps else None

    if manifold.chart == "polar":
        axes = _fiber_axes(manifold)

        def fmap(us):
            r = rho
            if h_expr is not None:
                r = rho + eps * h_expr(*us, *_fiber_embedding(manifold, us))
            return [r] + list(us)
    else:
        axes = _sphere_axes(n)

        def fmap(us):
            w = hyperspherical(us)
            r = rho
            if h_expr is not None:
                r = rho + eps * h_expr(*us, *w)
            s = manifold.chart_radius(r)
            return [s * wi for wi in w]

    return Immersion(n, axes, fmap, surface_id, params)


def geodesic_sphere(manifold: Manifold, rho: float = 1.0) -> Immersion:
    return _radial_surface(manifold, float(rho), 0.0, None, "geodesic_sphere", {"rho": float(rho)})


def perturbed_sphere(manifold: Manifold, rho: float = 1.0, eps: float = 0.1, h: str = None) -> Immersion:
    h = default_perturbation(manifold) if h is None else str(h)
    params = {"rho": float(rho), "eps": float(eps), "h": h}
    return _radial_surface(manifold, float(rho), float(eps), h, "perturbed_sphere", params)


def graph_over_fiber(manifold: Manifold, rho: float = 1.0, eps: float = 0.1, h: str = None) -> Immersion:
    if manifold.chart != "polar":
        raise ConfigError("graph_over_fiber needs a warped-type (polar chart) manifold")
    h = default_perturbation(manifold) if h is None else str(h)
    params = {"rho": float(rho), "eps": float(eps), "h": h}
    return _radial_surface(manifold, float(rho), float(eps), h, "graph_over_fiber", params)


def _need_cartesian(manifold, surface_id, dim=None):
    if manifold.chart != "cartesian":
        raise ConfigError(f"{surface_id} needs a Cartesian-chart manifold")
    if dim is not None and manifold.dim != dim:
        raise ConfigError(f"{surface_id} needs a {dim}-dimensional ambient, got {manifold.dim}")


def ellipsoid(manifold: Manifold, axes=(1.0, 1.0, 1.0), offset=None) -> Immersion:
    _need_cartesian(manifold, "ellipsoid")
    a = [float(v) for v in axes]
    if len(a) != manifold.dim:
        raise ConfigError(f"ellipsoid: need {manifold.dim} semi-axes, got {len(a)}")
    off = [0.0] * manifold.dim if offset is None else [float(v) for v in offset]

    def fmap(us):
        return [ai * wi + oi for ai, wi, oi in zip(a, hyperspherical(us), off)]

    params = {"axes": a}
    if offset is not None:
        params["offset"] = off
    return Immersion(manifold.dim - 1, _sphere_axes(manifold.dim - 1), fmap, "ellipsoid", params)


def torus_of_revolution(manifold: Manifold, R: float = 2.0, rho: float = 0.5, offset=None) -> Immersion:
    _need_cartesian(manifold, "torus_of_revolution", 3)
    R, rho = float(R), float(rho)
    if not 0 < rho < R:
        raise ConfigError(f"torus_of_revolution: need 0 < rho < R, got rho={rho}, R={R}")
    off = [0.0, 0.0, 0.0] if offset is None else [float(v) for v in offset]

    def fmap(us):
        w, v = us
        ring = R + rho * jets.cos(v)
        return [ring * jets.cos(w) + off[0], ring * jets.sin(w) + off[1], rho * jets.sin(v) + off[2]]

    params = {"R": R, "rho": rho}
    if offset is not None:
        params["offset"] = off
    return Immersion(2, (Axis(0, 2 * np.pi, True), Axis(0, 2 * np.pi, True)), fmap,
                     "torus_of_revolution", params)


def clifford_torus(manifold: Manifold, r1: float = float(np.sqrt(0.5))) -> Immersion:
    """``S^1(r1) x S^1(r2)`` in ``S^3`` (``r1^2 + r2^2 = 1`` after scaling) via stereographic chart."""
    if manifold.catalog_id != "spaceform_conformal" or manifold.dim != 3 or manifold.params["c"] <= 0:
        raise ConfigError("clifford_torus lives in spaceform_conformal(dim=3, c>0)")
    r1 = float(r1)
    if not 0.0 < r1 < 1.0:
        raise ConfigError("clifford_torus: need 0 < r1 < 1")
    r2 = float(np.sqrt(1.0 - r1 * r1))
    R = 1.0 / np.sqrt(manifold.params["c"])

    def fmap(us):
        a, b = us
        den = R / (1.0 - r2 * jets.sin(b))
        return [den * r1 * jets.cos(a), den * r1 * jets.sin(a), den * r2 * jets.cos(b)]

    return Immersion(2, (Axis(0, 2 * np.pi, True), Axis(0, 2 * np.pi, True)), fmap,
                     "clifford_torus", {"r1": r1})


def custom_immersion(manifold: Manifold, components, axes) -> Immersion:
    d = manifold.dim
    n = d - 1
    if len(components) != d:
        raise ConfigError(f"custom surface: need {d} components")
    if len(axes) != n:
        raise ConfigError(f"custom surface: need {n} axes [lo, hi, periodic|compact]")
    ax = []
    for spec in axes:
        lo, hi, kind = spec
        if kind not in ("periodic", "compact"):
            raise ConfigError("custom surface: axis kind must be 'periodic' or 'compact'")
        ax.append(Axis(float(lo), float(hi), kind == "periodic"))
    names = [f"u{i}" for i in range(n)]
    exprs = [Expression(str(c), names) for c in components]
    return Immersion(
        n, tuple(ax), lambda us: [e(*us) for e in exprs], "custom",
        {"components": [str(c) for c in components], "axes": [list(a) for a in axes]},
    )


SURFACES = {
    "geodesic_sphere": (geodesic_sphere, {"rho": "float"}, "geodesic sphere about the chart origin / r = rho"),
    "perturbed_sphere": (
        perturbed_sphere,
        {"rho": "float", "eps": "float", "h": "expression in u0.., w0.. (unit fibre coordinates)"},
        "radial graph rho + eps*h over the geodesic sphere",
    ),
    "graph_over_fiber": (
        graph_over_fiber,
        {"rho": "float", "eps": "float", "h": "expression"},
        "r = rho + eps*h(angles) in a warped-type chart",
    ),
    "ellipsoid": (ellipsoid, {"axes": "list of d floats", "offset": "optional list"}, "ellipsoid in a Cartesian chart"),
    "torus_of_revolution": (
        torus_of_revolution,
        {"R": "float", "rho": "float", "offset": "optional list"},
        "torus of revolution in a 3-dim Cartesian chart",
    ),
    "clifford_torus": (clifford_torus, {"r1": "float in (0,1)"}, "Clifford torus in S^3 (stereographic chart)"),
    "custom": (
        custom_immersion,
        {"components": "expressions in u0..", "axes": "[[lo, hi, periodic|compact], ...]"},
        "user immersion from the expression grammar",
    ),
}


def make_surface(surface_id: str, params: dict | None, manifold: Manifold) -> Immersion:
    params = dict(params or {})
    if surface_id not in SURFACES:
        raise ConfigError(f"unknown surface id {surface_id!r}; known: {', '.join(SURFACES)}")
    try:
        return SURFACES[surface_id][0](manifold, **params)
    except TypeError as exc:
        raise ConfigError(f"surface {surface_id}: bad parameters {sorted(params)}: {exc}") from None


# -- evaluation ----------------------------------------------------------


def _normal_covector(J):
    """Cofactor covector ``w_i = det[e_i | J]`` annihilating the columns of ``J``."""
    d = J.shape[-2]
    out = []
    for i in range(d):
        e = np.zeros(J.shape[:-1] + (1,))
        e[..., i, 0] = 1.0
        out.append(np.linalg.det(np.concatenate([e, J], axis=-1)))
    return np.stack(out, axis=-1)


def evaluate(immersion: Immersion, manifold: Manifold, u, flip: bool = False) -> SurfaceSample:
    u = np.asarray(u, dtype=float)
    n = immersion.n
    if manifold.dim != n + 1:
        raise ConfigError(f"surface of dimension {n} cannot be a hypersurface of a {manifold.dim}-manifold")
    us = Jet.variables(u)
    x, J, K = jets.stack(immersion.map(us), u)
    jet = metric_eval(manifold, x)
    curv = curvature_from_jet(jet)
    g = jet.g

    G = einsum("...ab,...ac,...cd->...bd", J, g, J)
    smin = np.linalg.eigvalsh(G)[..., 0]
    if np.any(~(smin > EPS_RANK)):
        k = int(np.argmin(np.where(np.isnan(smin), -np.inf, smin).ravel()))
        raise RankDeficient(
            f"{immersion.surface_id}: induced metric degenerate (min eigenvalue {smin.ravel()[k]:.3e}) "
            f"at u = {u.reshape(-1, n)[k]}"
        )
    eye = np.broadcast_to(np.eye(n), G.shape)
    C = np.swapaxes(np.linalg.solve(np.linalg.cholesky(G), eye), -1, -2)
    E = J @ C
    Gram = einsum("...ak,...ab,...bl->...kl", E, g, E)
    if np.max(np.abs(Gram - np.eye(n))) > ORTHO_TOL:
        C2 = np.swapaxes(np.linalg.solve(np.linalg.cholesky(Gram), eye), -1, -2)
        C = C @ C2
        E = J @ C

    w = _normal_covector(J)
    ginv = np.linalg.inv(g)
    nu = einsum("...ab,...b->...a", ginv, w)
    nu = nu / np.sqrt(einsum("...a,...a->...", nu, w))[..., None]
    if flip:
        nu = -nu
    area = np.sqrt(np.linalg.det(G))

    # second fundamental form in parameter coordinates, then in the frame
    acc = K + einsum("...aij,...ib,...jc->...abc", curv.gamma, J, J)
    Lform = -einsum("...a,...ab,...bcd->...cd", nu, g, acc)
    A_raw = np.swapaxes(C, -1, -2) @ Lform @ C
    sym_defect = np.max(np.abs(A_raw - np.swapaxes(A_raw, -1, -2)), axis=(-1, -2))
    if np.any(sym_defect > SYM_ABORT):
        raise SymmetryDefectTooLarge(f"shape operator symmetry defect {float(np.max(sym_defect)):.3e}")
    A = 0.5 * (A_raw + np.swapaxes(A_raw, -1, -2))
    principal = np.linalg.eigvalsh(A)
    sigma = elementary_symmetric(principal)
    H = sigma / np.array([comb(n, i) for i in range(n + 1)], dtype=float)
    T = newton_transformations(A, sigma)

    frame = SurfaceFrameData(x, J, G, E, nu, area)
    shape = ShapeData(A, sym_defect, principal, H, T)
    return SurfaceSample(u, frame, shape, jet, curv, K, C)


def frame_at(immersion: Immersion, manifold: Manifold, u, flip: bool = False) -> SurfaceFrameData:
    return evaluate(immersion, manifold, u, flip).frame


def shape_operator(immersion: Immersion, manifold: Manifold, u, flip: bool = False) -> ShapeData:
    return evaluate(immersion, manifold, u, flip).shape


def traces_from_tensors(g, riemann_lowered, ricci, nu, E, A, P):
    """``(t1, t2, t3)`` from precomputed tensors at the same points."""
    AE = einsum("...ak,...kq->...aq", E, A)
    t1 = einsum("...lkij,...lq,...k,...i,...jq->...", riemann_lowered, E, nu, nu, AE)
    t3 = einsum("...lkij,...lq,...k,...i,...jq->...", riemann_lowered, E, nu, P, AE)
    t2 = einsum("...ab,...a,...b->...", ricci, tangential_shape_vector(g, E, A, P), nu)
    return t1, t2, t3


def curvature_traces(manifold: Manifold, x, nu, E, A, P):
    """The three curvature traces along the hypersurface.

    t1 = sum_q <R(nu, A E_q) nu, E_q>
    t2 = Ric(A P^T, nu), with P^T the tangential projection of P
    t3 = sum_q <R(P, A E_q) nu, E_q>, with the full P
    """
    jet = metric_eval(manifold, x)
    curv = curvature_from_jet(jet)
    return traces_from_tensors(jet.g, curv.riemann_lowered, curv.ricci, nu, E, A, P)


def tangential_shape_vector(g, E, A, P):
    """Ambient components of ``A(P^T)``."""
    p = einsum("...ak,...ab,...b->...k", E, g, P)
    return einsum("...ak,...kb,...b->...a", E, A, p)

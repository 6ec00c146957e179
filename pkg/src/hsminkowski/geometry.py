"""Chart-defined Riemannian metrics and their curvature.

Index conventions (trailing axes; any leading axes are batch axes):

* ``dg[..., i, j, k] = d_k g_ij`` and ``d2g[..., i, j, k, l] = d_k d_l g_ij``
* ``gamma[..., a, b, c] = Gamma^a_{bc}``, ``dgamma[..., a, b, c, e] = d_e Gamma^a_{bc}``
* ``riemann_up[..., a, b, i, j]`` is the ``a`` component of ``R(d_i, d_j) d_b`` with
  ``R(X, Y) = [nabla_X, nabla_Y] - nabla_[X, Y]``
* ``riemann_lowered[..., l, k, i, j] = <R(d_i, d_j) d_k, d_l>``
* ``ricci[..., b, c] = sum_a riemann_up[..., a, c, a, b]``, i.e.
  ``Ric(X, Y) = sum_j <R(E_j, X) Y, E_j>`` over an orthonormal frame.

With these conventions a space form of curvature ``c`` has
``riemann_lowered = c (g_jk g_il - g_ik g_jl)`` and ``Ric = c (d - 1) g``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from . import jets
from .errors import ConfigError, DomainViolation, NotPositiveDefinite
from .jets import Expression, Jet

EPS_PD = 1e-12
EPS_DOM = 1e-9


def einsum(*operands):
    """``np.einsum`` with contraction-path optimization (the batched tensors are large)."""
    return np.einsum(*operands, optimize=True)


@dataclass(frozen=True)
class MetricJet:
    g: np.ndarray
    dg: np.ndarray
    d2g: np.ndarray


@dataclass(frozen=True)
class CurvatureData:
    gamma: np.ndarray
    dgamma: np.ndarray
    riemann_up: np.ndarray
    riemann_lowered: np.ndarray
    ricci: np.ndarray


@dataclass(frozen=True)
class Manifold:
    """An immutable single-chart Riemannian manifold.

    ``metric`` maps a list of coordinate jets to a ``dim x dim`` nested list of
    jets (or constants).  ``margin`` returns, per point, a signed distance to
    the chart boundary or excluded locus; points with margin ``<= EPS_DOM``
    are inadmissible.
    """

    dim: int
    metric: Callable
    margin: Callable
    sampler: Callable
    catalog_id: str
    params: dict = field(default_factory=dict)
    chart: str = "cartesian"  # or "polar": x = (r, fibre angles)
    fiber: Optional[str] = None  # "sphere", "torus", "s2xs2" for polar charts
    position: Optional[Callable] = None  # coordinate jets -> components of P
    chart_radius: Optional[Callable] = None  # geodesic radius -> chart radius
    orientation: int = 1

    def __hash__(self):
        return hash((self.catalog_id, repr(sorted(self.params.items()))))

    def check_domain(self, x) -> None:
        x = np.asarray(x, dtype=float)
        if x.shape[-1] != self.dim:
            raise DomainViolation(f"expected {self.dim} chart coordinates, got {x.shape[-1]}")
        m = np.asarray(self.margin(x))
        bad = ~(m > EPS_DOM)
        if np.any(bad):
            idx = np.argwhere(np.broadcast_to(bad, m.shape))[0]
            pt = x[tuple(idx)] if x.ndim > 1 else x
            raise DomainViolation(
                f"{self.catalog_id}: point {np.array2string(pt, precision=6)} is not admissible "
                f"(margin {float(np.broadcast_to(m, bad.shape)[tuple(idx)]):.3g})"
            )

    def sample(self, rng: np.random.Generator, count: int) -> np.ndarray:
        return self.sampler(rng, count)


# -- metric jets ---------------------------------------------------------


def metric_eval(manifold: Manifold, x, check: bool = True) -> MetricJet:
    """Evaluate ``g``, ``dg`` and ``d2g`` at chart point(s) ``x``."""
    x = np.asarray(x, dtype=float)
    if check:
        manifold.check_domain(x)
    d = manifold.dim
    xs = Jet.variables(x)
    rows = manifold.metric(xs)
    entries = [rows[i][j] for i in range(d) for j in range(d)]
    v, gr, hs = jets.stack(entries, x)
    batch = x.shape[:-1]
    g = v.reshape(batch + (d, d))
    dg = gr.reshape(batch + (d, d, d))
    d2g = hs.reshape(batch + (d, d, d, d))
    # exact symmetrization guards against asymmetric user input rounding
    g = 0.5 * (g + np.swapaxes(g, -1, -2))
    dg = 0.5 * (dg + np.swapaxes(dg, -2, -3))
    d2g = 0.5 * (d2g + np.swapaxes(d2g, -3, -4))
    d2g = 0.5 * (d2g + np.swapaxes(d2g, -1, -2))
    if check:
        check_positive_definite(g)
    return MetricJet(g, dg, d2g)


def check_positive_definite(g) -> None:
    lam = np.linalg.eigvalsh(g)[..., 0]
    if np.any(~(lam > EPS_PD)):
        raise NotPositiveDefinite(f"metric minimum eigenvalue {float(np.min(lam)):.3e} <= {EPS_PD}")


def christoffel(jet: MetricJet):
    """Christoffel symbols of the second kind and their first partials."""
    g, dg, d2g = jet.g, jet.dg, jet.d2g
    ginv = np.linalg.inv(g)
    # first kind, lowered on the first index: [e, b, c]
    first = 0.5 * (
        einsum("...ecb->...ebc", dg) + dg - einsum("...bce->...ebc", dg)
    )
    dfirst = 0.5 * (
        einsum("...ecbf->...ebcf", d2g) + d2g - einsum("...bcef->...ebcf", d2g)
    )
    gamma = einsum("...ae,...ebc->...abc", ginv, first)
    dginv = -einsum("...ap,...pqf,...qe->...aef", ginv, dg, ginv)
    dgamma = einsum("...aef,...ebc->...abcf", dginv, first) + einsum(
        "...ae,...ebcf->...abcf", ginv, dfirst
    )
    return gamma, dgamma


def curvature_from_jet(jet: MetricJet) -> CurvatureData:
    gamma, dgamma = christoffel(jet)
    rup = (
        einsum("...ajbi->...abij", dgamma)
        - einsum("...aibj->...abij", dgamma)
        + einsum("...aie,...ejb->...abij", gamma, gamma)
        - einsum("...aje,...eib->...abij", gamma, gamma)
    )
    rlow = einsum("...la,...akij->...lkij", jet.g, rup)
    ricci = einsum("...acab->...bc", rup)
    return CurvatureData(gamma, dgamma, rup, rlow, ricci)


def riemann(manifold: Manifold, x) -> CurvatureData:
    return curvature_from_jet(metric_eval(manifold, x))


def space_form_tensor(g, c):
    """``c (g_jk g_il - g_ik g_jl)`` laid out as ``[l, k, i, j]``."""
    return c * (
        einsum("...jk,...il->...lkij", g, g) - einsum("...ik,...jl->...lkij", g, g)
    )


def curvature_model_residual(manifold: Manifold, x, c: float):
    """Max-norm deviation of ``R_lkij`` from the constant-curvature model."""
    jet = metric_eval(manifold, x)
    curv = curvature_from_jet(jet)
    dev = curv.riemann_lowered - space_form_tensor(jet.g, c)
    return np.max(np.abs(dev), axis=(-1, -2, -3, -4))


def orthonormal_frame(g):
    """Columns ``F[..., :, a]`` with ``F^T g F = I`` (Gram-Schmidt in axis order)."""
    L = np.linalg.cholesky(g)
    eye = np.broadcast_to(np.eye(g.shape[-1]), g.shape)
    return np.swapaxes(np.linalg.solve(L, eye), -1, -2)


def frame_bilinear(g, b):
    """Components of a bilinear form ``b`` in the orthonormal frame of ``g``."""
    F = orthonormal_frame(g)
    return einsum("...ia,...ij,...jb->...ab", F, b, F)


def einstein_defect(g, ricci):
    """``max |Ric - (tr_g Ric / d) g|`` measured in an orthonormal frame."""
    R = frame_bilinear(g, ricci)
    d = g.shape[-1]
    tr = np.trace(R, axis1=-1, axis2=-2)
    dev = R - tr[..., None, None] / d * np.eye(d)
    return np.max(np.abs(dev), axis=(-1, -2))


def scalar_curvature(g, ricci):
    return einsum("...ij,...ij->...", np.linalg.inv(g), ricci)


# -- catalog -------------------------------------------------------------


def _diag(entries):
    d = len(entries)
    return [[entries[i] if i == j else 0.0 for j in range(d)] for i in range(d)]


def _sphere_fiber_metric(angles):
    """Round metric on S^m in hyperspherical angles (theta_1..theta_{m-1}, phi)."""
    out = []
    w = 1.0
    for i, t in enumerate(angles):
        out.append(w)
        if i < len(angles) - 1:
            w = w * jets.sin(t) ** 2
    return out


def _polar_margin(x, polar_axes):
    m = np.full(x.shape[:-1], np.inf)
    for a in polar_axes:
        t = x[..., a]
        m = np.minimum(m, np.minimum(t, np.pi - t))
    return m


def _sample_polar(rng, count, dim, r_range, polar_axes, periodic_axes):
    x = np.empty((count, dim))
    x[:, 0] = rng.uniform(*r_range, size=count)
    for a in polar_axes:
        x[:, a] = rng.uniform(0.15, np.pi - 0.15, size=count)
    for a in periodic_axes:
        x[:, a] = rng.uniform(0.0, 2 * np.pi, size=count)
    return x


def euclidean(dim: int = 3) -> Manifold:
    dim = int(dim)
    if dim < 2:
        raise ConfigError("euclidean: dim must be >= 2")
    return Manifold(
        dim=dim,
        metric=lambda xs: _diag([1.0] * dim),
        margin=lambda x: np.full(x.shape[:-1], np.inf),
        sampler=lambda rng, n: rng.uniform(-2.0, 2.0, size=(n, dim)),
        catalog_id="euclidean",
        params={"dim": dim},
        position=lambda xs: list(xs),
        chart_radius=lambda rho: rho,
    )


def spaceform_conformal(dim: int = 3, c: float = 1.0) -> Manifold:
    """``g = lambda^2 delta`` with ``lambda = 2 / (1 + c |x|^2)``: constant curvature ``c``."""
    dim, c = int(dim), float(c)
    if dim < 2:
        raise ConfigError("spaceform_conformal: dim must be >= 2")

    def metric(xs):
        r2 = sum(xi * xi for xi in xs)
        lam = 2.0 / (1.0 + c * r2)
        return _diag([lam * lam] * dim)

    def margin(x):
        if c >= 0:
            return np.full(x.shape[:-1], np.inf)
        return 1.0 / abs(c) - np.sum(x * x, axis=-1)

    def sampler(rng, n):
        if c >= 0:
            return rng.uniform(-1.5, 1.5, size=(n, dim))
        v = rng.normal(size=(n, dim))
        v /= np.linalg.norm(v, axis=-1, keepdims=True)
        rad = 0.85 / np.sqrt(abs(c)) * rng.uniform(0, 1, size=(n, 1)) ** (1.0 / dim)
        return v * rad

    def chart_radius(rho):
        if c > 0:
            return jets.tan(np.sqrt(c) * rho / 2.0) / np.sqrt(c)
        if c < 0:
            return jets.tanh(np.sqrt(-c) * rho / 2.0) / np.sqrt(-c)
        return rho

    return Manifold(
        dim=dim,
        metric=metric,
        margin=margin,
        sampler=sampler,
        catalog_id="spaceform_conformal",
        params={"dim": dim, "c": c},
        position=lambda xs: list(xs),
        chart_radius=chart_radius,
    )


def warped(dim: int = 3, phi: str = "r", fiber: str = "sphere", r_min: float = None,
           r_max: float = None) -> Manifold:
    """``dr^2 + phi(r)^2 g_F`` with ``F`` a round sphere or a flat torus."""
    dim = int(dim)
    if dim < 2:
        raise ConfigError("warped: dim must be >= 2")
    if fiber not in ("sphere", "torus"):
        raise ConfigError(f"warped: unknown fiber {fiber!r} (sphere|torus)")
    phi_expr = Expression(phi, ["r"])
    m = dim - 1
    polar_axes = list(range(1, dim - 1)) if fiber == "sphere" else []
    periodic_axes = [dim - 1] if fiber == "sphere" else list(range(1, dim))

    def metric(xs):
        p = phi_expr(xs[0])
        p2 = p * p
        base = _sphere_fiber_metric(xs[1:]) if fiber == "sphere" else [1.0] * m
        return _diag([1.0] + [p2 * b for b in base])

    def margin(x):
        r = x[..., 0]
        out = np.asarray(phi_expr(r), dtype=float) * np.ones(x.shape[:-1])
        if r_min is not None:
            out = np.minimum(out, r - r_min)
        if r_max is not None:
            out = np.minimum(out, r_max - r)
        if polar_axes:
            out = np.minimum(out, _polar_margin(x, polar_axes))
        return out

    lo = 0.3 if r_min is None else r_min + 0.1
    hi = 2.5 if r_max is None else r_max - 0.1

    def sampler(rng, n):
        return _sample_polar(rng, n, dim, (lo, hi), polar_axes, periodic_axes)

    def position(xs):
        return [phi_expr(xs[0])] + [0.0] * m

    params = {"dim": dim, "phi": phi, "fiber": fiber}
    if r_min is not None:
        params["r_min"] = r_min
    if r_max is not None:
        params["r_max"] = r_max
    return Manifold(
        dim=dim,
        metric=metric,
        margin=margin,
        sampler=sampler,
        catalog_id="warped",
        params=params,
        chart="polar",
        fiber=fiber,
        position=position,
        chart_radius=lambda rho: rho,
    )


def _s2xs2_metric(xs, a2, scale=1.0):
    t1, _, t2, _ = xs
    s = a2 * scale
    return [s, s * jets.sin(t1) ** 2, s, s * jets.sin(t2) ** 2]


def product_spheres(a: float = 1.0) -> Manifold:
    """``S^2(a) x S^2(a)`` in angles ``(theta1, phi1, theta2, phi2)``."""
    a = float(a)
    a2 = a * a
    return Manifold(
        dim=4,
        metric=lambda xs: _diag(_s2xs2_metric(xs, a2)),
        margin=lambda x: _polar_margin(x, [0, 2]),
        sampler=lambda rng, n: np.stack(
            [
                rng.uniform(0.15, np.pi - 0.15, n),
                rng.uniform(0, 2 * np.pi, n),
                rng.uniform(0.15, np.pi - 0.15, n),
                rng.uniform(0, 2 * np.pi, n),
            ],
            axis=-1,
        ),
        catalog_id="product_spheres",
        params={"a": a},
    )


def einstein_cone(dim: int = 5, a: float = None) -> Manifold:
    """Cone ``dr^2 + r^2 g`` over ``S^2(a) x S^2(a)``; Ricci-flat for ``a^2 = 1/3``."""
    if int(dim) != 5:
        raise ConfigError("einstein_cone: only dim = 5 is available")
    a = float(np.sqrt(1.0 / 3.0)) if a is None else float(a)
    a2 = a * a

    def metric(xs):
        r = xs[0]
        return _diag([1.0] + _s2xs2_metric(xs[1:], a2, r * r))

    return Manifold(
        dim=5,
        metric=metric,
        margin=lambda x: np.minimum(x[..., 0], _polar_margin(x, [1, 3])),
        sampler=lambda rng, n: _sample_polar(rng, n, 5, (0.3, 2.5), [1, 3], [2, 4]),
        catalog_id="einstein_cone",
        params={"dim": 5, "a": a},
        chart="polar",
        fiber="s2xs2",
        position=lambda xs: [xs[0], 0.0, 0.0, 0.0, 0.0],
        chart_radius=lambda rho: rho,
    )


def custom(dim: int, components, box=None, sample_box=None) -> Manifold:
    """User metric from expressions in ``x0 .. x{d-1}``.

    ``components`` is either a full ``d x d`` list of lists or the upper
    triangle flattened row by row.  ``box`` optionally restricts the chart to
    ``[[lo, hi], ...]`` per coordinate.
    """
    dim = int(dim)
    names = [f"x{i}" for i in range(dim)]
    comps = list(components)
    if len(comps) == dim and all(isinstance(r, (list, tuple)) for r in comps):
        exprs = [[Expression(str(comps[i][j]), names) for j in range(dim)] for i in range(dim)]
    elif len(comps) == dim * (dim + 1) // 2:
        it = iter(comps)
        exprs = [[None] * dim for _ in range(dim)]
        for i in range(dim):
            for j in range(i, dim):
                exprs[i][j] = exprs[j][i] = Expression(str(next(it)), names)
    else:
        raise ConfigError(
            f"custom metric: need {dim}x{dim} matrix or {dim * (dim + 1) // 2} upper-triangle entries"
        )
    box_arr = None if box is None else np.asarray(box, dtype=float)
    samp = np.asarray(sample_box if sample_box is not None else (box if box is not None else [[-1.5, 1.5]] * dim), dtype=float)

    def metric(xs):
        return [[exprs[i][j](*xs) for j in range(dim)] for i in range(dim)]

    def margin(x):
        if box_arr is None:
            return np.full(x.shape[:-1], np.inf)
        return np.min(np.minimum(x - box_arr[:, 0], box_arr[:, 1] - x), axis=-1)

    def sampler(rng, n):
        lo, hi = samp[:, 0], samp[:, 1]
        span = hi - lo
        return lo + 0.05 * span + 0.9 * span * rng.uniform(size=(n, dim))

    params = {"dim": dim, "components": comps}
    if box is not None:
        params["box"] = box
    return Manifold(
        dim=dim,
        metric=metric,
        margin=margin,
        sampler=sampler,
        catalog_id="custom",
        params=params,
        chart_radius=lambda rho: rho,
    )


METRICS = {
    "euclidean": (euclidean, {"dim": "int >= 2 (default 3)"}, "flat space, Cartesian chart"),
    "spaceform_conformal": (
        spaceform_conformal,
        {"dim": "int >= 2", "c": "float curvature"},
        "constant curvature c, g = (2/(1+c|x|^2))^2 delta (stereographic/Poincare chart)",
    ),
    "warped": (
        warped,
        {
            "dim": "int >= 2",
            "phi": "expression in r",
            "fiber": "sphere|torus",
            "r_min": "optional float",
            "r_max": "optional float",
        },
        "warped product dr^2 + phi(r)^2 g_F over a round sphere or flat torus",
    ),
    "product_spheres": (product_spheres, {"a": "float radius"}, "S^2(a) x S^2(a)"),
    "einstein_cone": (
        einstein_cone,
        {"dim": "5", "a": "optional float (default sqrt(1/3), Ricci-flat)"},
        "cone dr^2 + r^2 g over S^2(a) x S^2(a)",
    ),
    "custom": (
        custom,
        {"dim": "int", "components": "expressions in x0..", "box": "optional [[lo,hi],...]"},
        "user metric from the expression grammar",
    ),
}


def make_manifold(catalog_id: str, params: dict | None = None) -> Manifold:
    params = dict(params or {})
    if catalog_id not in METRICS:
        raise ConfigError(f"unknown manifold id {catalog_id!r}; known: {', '.join(METRICS)}")
    ctor = METRICS[catalog_id][0]
    try:
        return ctor(**params)
    except TypeError as exc:
        raise ConfigError(f"manifold {catalog_id}: bad parameters {sorted(params)}: {exc}") from None

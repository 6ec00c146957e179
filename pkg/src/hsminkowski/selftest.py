"""Invariant battery behind ``hsminkowski selftest``.

Each suite returns a list of :class:`Check` records (measured value against a
pinned tolerance).  The suites are pure functions of the seed.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import comb

import numpy as np

from .fields import position_field, position_identity_residuals
from .geometry import make_manifold, metric_eval, riemann, space_form_tensor
from .hypersurface import charpoly_symmetric, lie_term_pullback, mean_curvatures, newton_transformations
from .identities import umbilicity_defect
from .oracles import lie_term_bruteforce

# metrics exercised by the curvature suite (every catalog family)
CATALOG_SAMPLES = [
    ("euclidean", {"dim": 3}),
    ("euclidean", {"dim": 4}),
    ("spaceform_conformal", {"dim": 3, "c": 1.0}),
    ("spaceform_conformal", {"dim": 4, "c": -1.0}),
    ("warped", {"dim": 3, "phi": "1 + r**2/4", "fiber": "torus"}),
    ("warped", {"dim": 3, "phi": "1 + r**2/4", "fiber": "sphere"}),
    ("warped", {"dim": 4, "phi": "sinh(r)", "fiber": "sphere"}),
    ("product_spheres", {"a": 1.0}),
    ("einstein_cone", {}),
    ("custom", {"dim": 3, "components": ["1 + 0.1*x0**2", "0.05*x0*x1", "0", "1 + 0.1*x1**2", "0.05*x2",
                                         "1 + 0.05*x2**2"]}),
]
POSITION_SAMPLES = [
    ("euclidean", {"dim": 3}),
    ("spaceform_conformal", {"dim": 3, "c": 1.0}),
    ("spaceform_conformal", {"dim": 4, "c": -1.0}),
    ("warped", {"dim": 3, "phi": "1 + r**2/4", "fiber": "torus"}),
    ("warped", {"dim": 3, "phi": "1 + r**2/4", "fiber": "sphere"}),
    ("warped", {"dim": 4, "phi": "sinh(r)", "fiber": "sphere"}),
    ("einstein_cone", {}),
]


@dataclass
class Check:
    suite: str
    name: str
    value: float
    tol: float

    @property
    def ok(self) -> bool:
        return bool(np.isfinite(self.value) and self.value <= self.tol)


def _label(cid, params):
    inner = ",".join(f"{k}={v}" for k, v in params.items() if k != "components")
    return f"{cid}({inner})"


def riemann_symmetry_defects(R):
    """Max relative defects of the algebraic symmetries of ``R[l, k, i, j]``."""
    scale = 1.0 + np.max(np.abs(R))
    anti_ij = np.max(np.abs(R + np.swapaxes(R, -1, -2)))
    anti_lk = np.max(np.abs(R + np.swapaxes(R, -3, -4)))
    pair = np.max(np.abs(R - np.einsum("...ijlk->...lkij", R)))
    # <R(e_i,e_j)e_k + R(e_j,e_k)e_i + R(e_k,e_i)e_j, e_l>
    bianchi = np.max(np.abs(
        R + np.einsum("...lijk->...lkij", R) + np.einsum("...ljki->...lkij", R)
    ))
    return {
        "antisym_ij": anti_ij / scale,
        "antisym_lk": anti_lk / scale,
        "pair_symmetry": pair / scale,
        "first_bianchi": bianchi / scale,
    }


def spec_pattern(g, c):
    """``c (g_ki g_lj - g_kj g_li)`` indexed ``[l, k, i, j]``."""
    return c * (
        np.einsum("...ki,...lj->...lkij", g, g) - np.einsum("...kj,...li->...lkij", g, g)
    )


def suite_curvature(seed: int = 0, points: int = 100):
    rng = np.random.default_rng(seed)
    out = []
    for d in (3, 4):
        for c in (-1.0, 1.0):
            M = make_manifold("spaceform_conformal", {"dim": d, "c": c})
            x = M.sample(rng, points)
            R = riemann(M, x).riemann_lowered
            g = metric_eval(M, x).g
            out.append(Check("curvature", f"space form d={d} c={c:+g}: R vs c(g g - g g)",
                             float(np.max(np.abs(R - space_form_tensor(g, c)))), 1e-8))
            # the same tensor read as <R(e_l,e_k)e_i,e_j> against the literal index pattern
            Rswap = np.einsum("...jilk->...lkij", R)
            out.append(Check("curvature", f"space form d={d} c={c:+g}: <R(e_l,e_k)e_i,e_j> pattern",
                             float(np.max(np.abs(Rswap - spec_pattern(g, c)))), 1e-8))
    for cid, params in CATALOG_SAMPLES:
        M = make_manifold(cid, params)
        x = M.sample(rng, points)
        R = riemann(M, x).riemann_lowered
        for key, val in riemann_symmetry_defects(R).items():
            out.append(Check("curvature", f"{_label(cid, params)} {key}", float(val), 1e-8))
    return out


def random_unit_vectors(rng, g):
    v = rng.normal(size=g.shape[:-1])
    return v / np.sqrt(np.einsum("...a,...ab,...b->...", v, g, v))[..., None]


def suite_position(seed: int = 0, points: int = 1000):
    rng = np.random.default_rng(seed)
    out = []
    for cid, params in POSITION_SAMPLES:
        M = make_manifold(cid, params)
        P = position_field(M)
        x = M.sample(rng, points)
        v = random_unit_vectors(rng, metric_eval(M, x).g)
        res = position_identity_residuals(P, M, x, v)
        for key in ("skew", "traceless_sym", "curvature_p", "ricci_p", "flat_p"):
            out.append(Check("position", f"{_label(cid, params)} {key}",
                             float(np.max(getattr(res, key))), 1e-7))
    return out


def random_symmetric(rng, count, n):
    A = rng.normal(size=(count, n, n))
    return 0.5 * (A + np.swapaxes(A, -1, -2))


def suite_lie_term(seed: int = 0, pairs: int = 1000, n_max: int = 5):
    rng = np.random.default_rng(seed)
    out = []
    for n in range(1, n_max + 1):
        S = rng.normal(size=(pairs, n, n))
        A = random_symmetric(rng, pairs, n)
        f = rng.normal(size=pairs)
        H = mean_curvatures(np.linalg.eigvalsh(A))
        for i in range(n):
            comb_val = lie_term_pullback(S, A, i, "combinatorial")
            brute = lie_term_bruteforce(S, A, i)
            trace = lie_term_pullback(S, A, i, "trace")
            denom = np.maximum(np.abs(brute), 1.0)
            out.append(Check("lie-term", f"n={n} i={i} combinatorial vs permutation expansion",
                             float(np.max(np.abs(comb_val - brute) / denom)), 1e-10))
            out.append(Check("lie-term", f"n={n} i={i} combinatorial vs tr(T_i S)",
                             float(np.max(np.abs(comb_val - trace) / denom)), 1e-10))
            red = lie_term_pullback(f[:, None, None] * np.eye(n), A, i)
            model = (n - i) * f * comb(n, i) * H[:, i]
            out.append(Check("lie-term", f"n={n} i={i} S = f id reduction",
                             float(np.max(np.abs(red - model) / np.maximum(np.abs(model), 1.0))), 1e-10))
    return out


def suite_newton(seed: int = 0, count: int = 500, n_max: int = 6):
    rng = np.random.default_rng(seed)
    out = []
    for n in range(1, n_max + 1):
        A = random_symmetric(rng, count, n)
        sigma = charpoly_symmetric(A)
        H = mean_curvatures(np.linalg.eigvalsh(A))
        T = newton_transformations(A)
        scale = np.maximum(np.max(np.abs(sigma), axis=-1), 1.0)
        eig_sigma = H * np.array([comb(n, k) for k in range(n + 1)])
        out.append(Check("newton", f"n={n} elementary symmetric: char. poly vs eigenvalues",
                         float(np.max(np.abs(sigma - eig_sigma) / scale[:, None])), 1e-10))
        worst_tr = 0.0
        worst_rec = 0.0
        for i in range(n):
            tr = np.trace(T[i], axis1=-1, axis2=-2)
            worst_tr = max(worst_tr, float(np.max(np.abs(tr - (n - i) * eig_sigma[:, i]) / scale)))
            if i:
                rec = eig_sigma[:, i, None, None] * np.eye(n) - A @ T[i - 1]
                worst_rec = max(worst_rec, float(np.max(np.abs(T[i] - rec) / scale[:, None, None])))
        out.append(Check("newton", f"n={n} tr T_i = (n-i) binom(n,i) H_i", worst_tr, 1e-10))
        out.append(Check("newton", f"n={n} T_i = binom(n,i) H_i id - A T_(i-1)", worst_rec, 1e-10))
        cayley = eig_sigma[:, n, None, None] * np.eye(n) - A @ T[n - 1]
        out.append(Check("newton", f"n={n} Cayley-Hamilton T_n = 0",
                         float(np.max(np.abs(cayley) / scale[:, None, None])), 1e-10))
    return out


def suite_umbilicity(seed: int = 0, count: int = 1000, n_max: int = 6):
    rng = np.random.default_rng(seed)
    out = []
    for n in range(1, n_max + 1):
        A = random_symmetric(rng, count, n)
        lhs, rhs = umbilicity_defect(A)
        out.append(Check("umbilicity", f"n={n} lhs = rhs",
                         float(np.max(np.abs(lhs - rhs) / (np.abs(lhs) + 1.0))), 1e-12))
        lam = rng.normal(size=count)
        lhs0, rhs0 = umbilicity_defect(lam[:, None, None] * np.eye(n))
        out.append(Check("umbilicity", f"n={n} umbilic matrices give (0, 0)",
                         float(np.max(np.abs(lhs0) + np.abs(rhs0)) / (1 + np.max(lam**2))), 1e-12))
    return out


SUITES = {
    "curvature": suite_curvature,
    "position": suite_position,
    "lie-term": suite_lie_term,
    "newton": suite_newton,
    "umbilicity": suite_umbilicity,
}


def run(suites=None, seed: int = 0):
    names = list(SUITES) if not suites else list(suites)
    checks = []
    for name in names:
        checks.extend(SUITES[name](seed=seed))
    return checks

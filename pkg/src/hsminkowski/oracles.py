"""Independent reference computations used by the self-test and the test suite.

Nothing here is on the production path.  The Lie-term oracle expands the
alternating composition product literally: a sum over every slot the Lie
derivative can occupy and over every permutation of the ``n`` factors, with
one determinant per term.  The remaining oracles are central differences.
"""

from __future__ import annotations

import itertools
from math import factorial

import numpy as np

from . import jets
from .geometry import metric_eval
from .hypersurface import evaluate
from .jets import Jet


def lie_term_bruteforce(S, A, i: int):
    """``1/(i!(n-i)!)`` times the full permutation expansion of the Lie term.

    Factors: ``n - i`` copies of the mirror map (pulled back to the identity
    rows), one of which is replaced by its Lie derivative (rows of ``S``), and
    ``i`` copies of the identity endomorphism (pulled back to rows of ``A``).
    """
    S = np.asarray(S, dtype=float)
    A = np.asarray(A, dtype=float)
    n = A.shape[-1]
    eye = np.broadcast_to(np.eye(n), A.shape)
    total = np.zeros(A.shape[:-2])
    for slot in range(n - i):
        factors = [S if k == slot else eye for k in range(n - i)] + [A] * i
        for sigma in itertools.permutations(range(n)):
            M = np.stack([factors[sigma[j]][..., j, :] for j in range(n)], axis=-2)
            total = total + np.linalg.det(M)
    return total / (factorial(i) * factorial(n - i))


def fd_metric_derivative(manifold, x, h: float = 1e-5):
    """``dg[..., i, j, k] = d_k g_ij`` by central differences."""
    x = np.asarray(x, dtype=float)
    d = manifold.dim
    out = np.empty(x.shape[:-1] + (d, d, d))
    for k in range(d):
        step = np.zeros(d)
        step[k] = h
        gp = metric_eval(manifold, x + step, check=False).g
        gm = metric_eval(manifold, x - step, check=False).g
        out[..., k] = (gp - gm) / (2 * h)
    return out


def fd_christoffel(manifold, x, h: float = 1e-5):
    """Christoffel symbols from a finite-difference metric derivative."""
    g = metric_eval(manifold, x, check=False).g
    dg = fd_metric_derivative(manifold, x, h)
    # lowered[a, b, c] = 1/2 (d_c g_ab + d_b g_ac - d_a g_bc)
    lowered = 0.5 * (
        np.einsum("...abc->...abc", dg)
        + np.einsum("...acb->...abc", dg)
        - np.einsum("...bca->...abc", dg)
    )
    return np.einsum("...ea,...abc->...ebc", np.linalg.inv(g), lowered)


def fd_covariant_derivative(fld, manifold, x, h: float = 1e-5):
    """``nablaP[a, b]`` from central differences of the components."""
    x = np.asarray(x, dtype=float)
    d = manifold.dim

    def comps(y):
        P, _, _ = jets.stack(fld.components(Jet.variables(y)), y)
        return P

    dP = np.empty(x.shape[:-1] + (d, d))
    for b in range(d):
        step = np.zeros(d)
        step[b] = h
        dP[..., b] = (comps(x + step) - comps(x - step)) / (2 * h)
    gamma = fd_christoffel(manifold, x, h)
    return dP + np.einsum("...abc,...c->...ab", gamma, comps(x))


def fd_shape_operator(immersion, manifold, u, flip: bool = False, h: float = 1e-5):
    """Shape operator in the surface frame from differentiating the unit normal.

    ``A[k, b] = <nabla_{E_b} nu, E_k>`` with ``nabla_{d_c} nu = d_c(nu o iota) + Gamma(J_c, nu)``.
    """
    u = np.asarray(u, dtype=float)
    s = evaluate(immersion, manifold, u, flip)
    n = immersion.n
    g, nu, J, E, C = s.jet.g, s.frame.nu, s.frame.J, s.frame.E, s.C
    cols = []
    for c in range(n):
        step = np.zeros(n)
        step[c] = h
        nup = evaluate(immersion, manifold, u + step, flip).frame.nu
        num = evaluate(immersion, manifold, u - step, flip).frame.nu
        cols.append((nup - num) / (2 * h))
    dnu = np.stack(cols, axis=-1)
    W = dnu + np.einsum("...abc,...bk,...c->...ak", s.curvature.gamma, J, nu)
    return np.einsum("...ak,...ab,...bc,...cm->...km", E, g, W, C)

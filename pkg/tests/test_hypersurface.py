from math import comb

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from hsminkowski import oracles
from hsminkowski.errors import ConfigError, IndexOutOfRange, RankDeficient
from hsminkowski.geometry import make_manifold
from hsminkowski.hypersurface import (
    curvature_traces,
    evaluate,
    frame_at,
    lie_term_pullback,
    make_surface,
    mean_curvatures,
    newton_transformations,
    shape_operator,
)

G3 = ["1 + 0.1*x0**2", "0.05*x0*x1", "0", "1 + 0.1*x1**2", "0.05*x2", "1 + 0.05*x2**2"]


def _grid(immersion, m=5):
    axes = immersion.axes
    pts = [np.linspace(a.lo + 0.1, a.hi - 0.1, m) for a in axes]
    mesh = np.meshgrid(*pts, indexing="ij")
    return np.stack([v.ravel() for v in mesh], axis=-1)


def test_round_sphere_curvatures_and_area():
    M = make_manifold("euclidean", {"dim": 3})
    N = make_surface("geodesic_sphere", {"rho": 2.0}, M)
    u = _grid(N)
    s = evaluate(N, M, u)
    np.testing.assert_allclose(s.shape.H, np.broadcast_to([1.0, 0.5, 0.25], s.shape.H.shape), atol=1e-13)
    np.testing.assert_allclose(s.frame.area_density, 4.0 * np.sin(u[:, 0]), rtol=1e-13)
    # outward: <nu, x> > 0
    assert np.all(np.einsum("ka,ka->k", s.frame.nu, s.frame.x) > 0)


@pytest.mark.parametrize("d", [2, 3, 4, 5])
def test_sphere_normal_is_outward_in_every_dimension(d):
    M = make_manifold("euclidean", {"dim": d})
    N = make_surface("geodesic_sphere", {"rho": 1.0}, M)
    fr = frame_at(N, M, _grid(N, 3))
    np.testing.assert_allclose(fr.nu, fr.x, atol=1e-13)


def test_flip_reverses_normal_and_shape_operator():
    M = make_manifold("spaceform_conformal", {"dim": 4, "c": -1.0})
    N = make_surface("perturbed_sphere", {"rho": 0.5, "eps": 0.1}, M)
    u = _grid(N, 3)
    a = evaluate(N, M, u)
    b = evaluate(N, M, u, flip=True)
    np.testing.assert_allclose(b.frame.nu, -a.frame.nu)
    np.testing.assert_allclose(b.shape.A, -a.shape.A, atol=1e-14)


def test_frame_is_orthonormal_and_normal_is_unit():
    M = make_manifold("spaceform_conformal", {"dim": 3, "c": 1.0})
    N = make_surface("clifford_torus", {}, M)
    u = np.random.default_rng(0).uniform(0, 2 * np.pi, size=(50, 2))
    s = evaluate(N, M, u)
    g, nu, E = s.jet.g, s.frame.nu, s.frame.E
    np.testing.assert_allclose(np.einsum("ka,kab,kb->k", nu, g, nu), 1.0, atol=1e-10)
    np.testing.assert_allclose(np.einsum("ka,kab,kbi->ki", nu, g, E), 0.0, atol=1e-10)
    np.testing.assert_allclose(np.einsum("kai,kab,kbj->kij", E, g, E), np.broadcast_to(np.eye(2), (50, 2, 2)),
                               atol=1e-10)


def test_clifford_torus_principal_curvatures():
    M = make_manifold("spaceform_conformal", {"dim": 3, "c": 1.0})
    N = make_surface("clifford_torus", {}, M)
    sh = shape_operator(N, M, np.random.default_rng(1).uniform(0, 2 * np.pi, size=(200, 2)))
    assert np.std(sh.principal[:, 0]) < 1e-7 and np.std(sh.principal[:, 1]) < 1e-7
    np.testing.assert_allclose(sh.principal, np.broadcast_to([-1.0, 1.0], sh.principal.shape), atol=1e-12)
    np.testing.assert_allclose(sh.H[:, 1], 0.0, atol=1e-12)
    np.testing.assert_allclose(sh.H[:, 2], -1.0, atol=1e-12)


@pytest.mark.parametrize(
    "cid,mparams,sid,sparams",
    [
        ("euclidean", {"dim": 3}, "ellipsoid", {"axes": [1.0, 1.3, 0.7]}),
        ("custom", {"dim": 3, "components": G3}, "torus_of_revolution", {}),
        ("warped", {"dim": 3, "phi": "1 + r**2/4", "fiber": "torus"}, "graph_over_fiber", {"eps": 0.2}),
        ("spaceform_conformal", {"dim": 4, "c": 1.0}, "perturbed_sphere", {"rho": 0.5}),
        ("einstein_cone", {}, "perturbed_sphere", {}),
    ],
)
def test_shape_operator_matches_differentiated_normal(cid, mparams, sid, sparams):
    M = make_manifold(cid, mparams)
    N = make_surface(sid, sparams, M)
    u = _grid(N, 3 if N.n < 4 else 2)
    exact = evaluate(N, M, u)
    fd = oracles.fd_shape_operator(N, M, u)
    assert np.max(np.abs(exact.shape.A - fd)) < 1e-5 * (1 + np.max(np.abs(fd)))
    assert np.max(exact.shape.sym_defect) < 1e-10


def test_geodesic_sphere_in_cone_is_umbilic():
    M = make_manifold("einstein_cone", {})
    N = make_surface("geodesic_sphere", {"rho": 1.5}, M)
    sh = shape_operator(N, M, _grid(N, 2))
    np.testing.assert_allclose(sh.principal, 1 / 1.5, atol=1e-12)


sym_mats = st.integers(1, 5).flatmap(
    lambda n: st.tuples(
        arrays(np.float64, (n, n), elements=st.floats(-2, 2)),
        arrays(np.float64, (n, n), elements=st.floats(-2, 2)),
    )
)


@settings(max_examples=60, deadline=None)
@given(sym_mats)
def test_lie_term_paths_agree(pair):
    S, A = pair
    A = 0.5 * (A + A.T)
    n = A.shape[0]
    for i in range(n):
        a = lie_term_pullback(S, A, i)
        b = lie_term_pullback(S, A, i, "trace")
        c = oracles.lie_term_bruteforce(S, A, i)
        scale = 1 + abs(c)
        assert abs(a - c) <= 1e-10 * scale
        assert abs(b - c) <= 1e-10 * scale


def test_lie_term_index_range():
    A = np.eye(3)
    with pytest.raises(IndexOutOfRange):
        lie_term_pullback(A, A, 3)
    with pytest.raises(IndexOutOfRange):
        lie_term_pullback(A, A, -1)
    with pytest.raises(ValueError):
        lie_term_pullback(A, A, 0, "magic")


def test_newton_transformations_small_case():
    A = np.diag([1.0, 2.0, 3.0])
    T = newton_transformations(A)
    np.testing.assert_allclose(T[1], np.diag([5.0, 4.0, 3.0]))
    np.testing.assert_allclose(T[2], np.diag([6.0, 3.0, 2.0]))
    H = mean_curvatures(np.array([1.0, 2.0, 3.0]))
    np.testing.assert_allclose(H, [1.0, 2.0, 11 / 3, 6.0])
    for i in range(3):
        assert np.trace(T[i]) == pytest.approx((3 - i) * comb(3, i) * H[i])


def test_curvature_traces_in_space_form():
    # R = c(...) gives t1 = -c n H1, t2 = 0, t3 = -c <P,nu> n H1
    c = 1.0
    M = make_manifold("spaceform_conformal", {"dim": 4, "c": c})
    N = make_surface("perturbed_sphere", {"rho": 0.5}, M)
    s = evaluate(N, M, _grid(N, 3))
    P = np.random.default_rng(2).normal(size=s.frame.x.shape)
    t1, t2, t3 = curvature_traces(M, s.frame.x, s.frame.nu, s.frame.E, s.shape.A, P)
    nH1 = 3 * s.shape.H[:, 1]
    pnu = np.einsum("ka,kab,kb->k", P, s.jet.g, s.frame.nu)
    np.testing.assert_allclose(t1, -c * nH1, atol=1e-10)
    np.testing.assert_allclose(t2, 0.0, atol=1e-10)
    np.testing.assert_allclose(t3, -c * pnu * nH1, atol=1e-10)


def test_surface_errors():
    M = make_manifold("euclidean", {"dim": 3})
    with pytest.raises(ConfigError):
        make_surface("nope", {}, M)
    with pytest.raises(ConfigError):
        make_surface("graph_over_fiber", {}, M)
    with pytest.raises(ConfigError):
        make_surface("ellipsoid", {"axes": [1.0, 2.0]}, M)
    folded = make_surface(
        "custom", {"components": ["u0", "u0", "u1"], "axes": [[0, 1, "compact"], [0, 1, "compact"]]}, M
    )
    evaluate(folded, M, np.array([[0.5, 0.5]]))
    collapsed = make_surface(
        "custom", {"components": ["u0 + u1", "u0 + u1", "0*u0"], "axes": [[0, 1, "compact"], [0, 1, "compact"]]}, M
    )
    with pytest.raises(RankDeficient):
        evaluate(collapsed, M, np.array([[0.5, 0.5]]))

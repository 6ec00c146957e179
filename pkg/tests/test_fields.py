import numpy as np
import pytest

from hsminkowski import oracles
from hsminkowski.errors import ConfigError, NotAPositionField
from hsminkowski.fields import (
    conformal_factor_defect,
    expression_field,
    field_eval,
    make_field,
    position_field,
    position_identity_residuals,
    random_polynomial_field,
)
from hsminkowski.geometry import make_manifold, metric_eval
from hsminkowski.selftest import POSITION_SAMPLES, random_unit_vectors


@pytest.mark.parametrize("cid,params", POSITION_SAMPLES)
def test_position_field_proposition(cid, params):
    M = make_manifold(cid, params)
    rng = np.random.default_rng(0)
    x = M.sample(rng, 200)
    v = random_unit_vectors(rng, metric_eval(M, x).g)
    res = position_identity_residuals(position_field(M), M, x, v)
    assert res.max() < 1e-9
    assert np.max(conformal_factor_defect(position_field(M), M, x)) < 1e-12


def test_space_form_conformal_factor_closed_form():
    M = make_manifold("spaceform_conformal", {"dim": 3, "c": 1.0})
    x = M.sample(np.random.default_rng(1), 20)
    r2 = np.sum(x * x, axis=-1)
    f = field_eval(position_field(M), M, x).f
    np.testing.assert_allclose(f, (1 - r2) / (1 + r2), atol=1e-13)


def test_rotation_field_is_not_conformal():
    M = make_manifold("euclidean", {"dim": 3})
    rot = expression_field(["x1", "-x0", "0"], 3)
    x = M.sample(np.random.default_rng(2), 10)
    np.testing.assert_allclose(conformal_factor_defect(rot, M, x), 1.0)
    with pytest.raises(NotAPositionField):
        position_identity_residuals(rot, M, x, x)


@pytest.mark.parametrize(
    "cid,params",
    [
        ("euclidean", {"dim": 3}),
        ("custom", {"dim": 3, "components": ["1 + 0.1*x0**2", "0.05*x0*x1", "0", "1 + 0.1*x1**2", "0.05*x2",
                                             "1 + 0.05*x2**2"]}),
        ("warped", {"dim": 3, "phi": "1 + r**2/4", "fiber": "torus"}),
    ],
)
def test_random_field_covariant_derivative_matches_finite_differences(cid, params):
    M = make_manifold(cid, params)
    fld = make_field("random_polynomial", {}, 3, M)
    x = M.sample(np.random.default_rng(3), 8)
    exact = field_eval(fld, M, x).nablaP
    fd = oracles.fd_covariant_derivative(fld, M, x)
    assert np.max(np.abs(exact - fd)) <= 1e-6 * np.max(np.abs(exact))


def test_random_field_is_reproducible_and_seed_dependent():
    M = make_manifold("euclidean", {"dim": 3})
    x = M.sample(np.random.default_rng(4), 5)
    a = field_eval(random_polynomial_field(3, 11), M, x).P
    b = field_eval(random_polynomial_field(3, 11), M, x).P
    c = field_eval(random_polynomial_field(3, 12), M, x).P
    np.testing.assert_array_equal(a, b)
    assert np.max(np.abs(a - c)) > 1e-3


def test_random_field_on_torus_chart_is_periodic():
    M = make_manifold("warped", {"dim": 3, "phi": "1 + r**2/4", "fiber": "torus"})
    fld = make_field("random_polynomial", {"center": [1.0, 0.0, 0.0]}, 5, M)
    x = np.array([1.2, 0.4, 2.0])
    shifted = x + np.array([0.0, 2 * np.pi, -2 * np.pi])
    np.testing.assert_allclose(field_eval(fld, M, x).P, field_eval(fld, M, shifted).P, atol=1e-12)


def test_field_config_errors():
    M = make_manifold("warped", {"dim": 3, "phi": "1 + r**2/4", "fiber": "sphere"})
    with pytest.raises(ConfigError):
        make_field("random_polynomial", {}, 1, M)  # angle chart singular at the poles
    E = make_manifold("euclidean", {"dim": 3})
    with pytest.raises(ConfigError):
        make_field("random_polynomial", {}, None, E)
    with pytest.raises(ConfigError):
        make_field("coordinate_expression", {"components": ["x0", "x1"]}, None, E)
    with pytest.raises(ConfigError):
        make_field("position_catalog", {}, None, make_manifold("product_spheres", {}))

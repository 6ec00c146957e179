import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hsminkowski import jets
from hsminkowski.errors import ConfigError
from hsminkowski.jets import Expression, Jet

coords = st.floats(min_value=-1.5, max_value=1.5, allow_nan=False)


def _fd(fn, x, h=1e-4):
    """Central-difference gradient and Hessian of a scalar function."""
    k = len(x)
    grad = np.zeros(k)
    hess = np.zeros((k, k))
    for i in range(k):
        e = np.zeros(k)
        e[i] = h
        grad[i] = (fn(x + e) - fn(x - e)) / (2 * h)
        for j in range(k):
            f = np.zeros(k)
            f[j] = h
            hess[i, j] = (fn(x + e + f) - fn(x + e - f) - fn(x - e + f) + fn(x - e - f)) / (4 * h * h)
    return grad, hess


@settings(max_examples=40, deadline=None)
@given(coords, coords, coords)
def test_composite_expression_matches_finite_differences(a, b, c):
    x = np.array([a, b, c])

    def plain(y):
        return math.sin(y[0] * y[1]) + math.exp(0.3 * y[2]) / (2 + y[0] ** 2) + math.sqrt(3 + y[1] ** 2)

    xs = Jet.variables(x)
    val = jets.sin(xs[0] * xs[1]) + jets.exp(0.3 * xs[2]) / (2 + xs[0] ** 2) + jets.sqrt(3 + xs[1] ** 2)
    grad, hess = _fd(plain, x)
    assert val.v == pytest.approx(plain(x), abs=1e-12)
    np.testing.assert_allclose(val.g, grad, atol=1e-7)
    np.testing.assert_allclose(val.h, hess, atol=1e-5)


def test_hessian_is_symmetric_for_products():
    x = np.array([[0.3, -0.7], [1.1, 0.4]])
    u, v = Jet.variables(x)
    w = u * u * v + jets.cos(u - v) * jets.tanh(v)
    np.testing.assert_allclose(w.h, np.swapaxes(w.h, -1, -2), atol=1e-15)


def test_integer_and_real_powers_agree():
    x = np.array([0.8, 1.7])
    u, _ = Jet.variables(x)
    a = u ** 3
    b = u ** 3.0
    np.testing.assert_allclose(a.v, b.v)
    np.testing.assert_allclose(a.g, b.g)
    np.testing.assert_allclose(a.h, b.h, atol=1e-14)


def test_numpy_scalar_on_the_left():
    u, = Jet.variables(np.array([0.5]))
    w = np.float64(2.0) * u
    assert isinstance(w, Jet)
    assert w.g[0] == 2.0


def test_stack_shapes():
    x = np.zeros((4, 3))
    xs = Jet.variables(x)
    v, g, h = jets.stack([xs[0] * xs[1], 2.0, xs[2]], x)
    assert v.shape == (4, 3)
    assert g.shape == (4, 3, 3)
    assert h.shape == (4, 3, 3, 3)
    np.testing.assert_array_equal(g[:, 1], 0.0)


def test_expression_whitelist():
    e = Expression("x0**2 + sin(pi*x1)", ["x0", "x1"])
    assert e(2.0, 0.5) == pytest.approx(5.0)
    with pytest.raises(ConfigError):
        Expression("__import__('os')", ["x0"])
    with pytest.raises(ConfigError):
        Expression("y + 1", ["x0"])
    with pytest.raises(ConfigError):
        Expression("x0 +", ["x0"])

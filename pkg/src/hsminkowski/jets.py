"""Second-order truncated Taylor arithmetic, vectorized over a batch of points.

A :class:`Jet` carries the value, gradient and Hessian of a scalar function
with respect to ``k`` seed variables.  All arrays share a leading batch shape,
so a single expression evaluates exact first and second derivatives at every
quadrature node at once.

The module also hosts the small expression grammar used by scene files
(polynomials, elementary functions) which compiles strings into callables
that work on floats, arrays and jets alike.
"""

from __future__ import annotations

import ast
import math
from typing import Callable, Sequence

import numpy as np

from .errors import ConfigError


class Jet:
    """Truncated Taylor polynomial ``v + g.dx + dx.h.dx / 2``."""

    __slots__ = ("v", "g", "h")
    # numpy scalars/arrays must defer to the reflected jet operators
    __array_ufunc__ = None

    def __init__(self, v, g, h):
        self.v = v
        self.g = g
        self.h = h

    @property
    def nvars(self) -> int:
        return self.g.shape[-1]

    @classmethod
    def variables(cls, x: np.ndarray) -> list["Jet"]:
        """Seed one jet per trailing component of ``x`` (shape ``(..., k)``)."""
        x = np.asarray(x, dtype=float)
        k = x.shape[-1]
        batch = x.shape[:-1]
        eye = np.eye(k)
        out = []
        for i in range(k):
            g = np.broadcast_to(eye[i], batch + (k,))
            h = np.zeros(batch + (k, k))
            out.append(cls(x[..., i], g, h))
        return out

    # -- helpers ---------------------------------------------------------
    def _unary(self, f0, f1, f2) -> "Jet":
        g = f1[..., None] * self.g
        h = f1[..., None, None] * self.h + f2[..., None, None] * (
            self.g[..., :, None] * self.g[..., None, :]
        )
        return Jet(f0, g, h)

    def _scale(self, c) -> "Jet":
        c = np.asarray(c, dtype=float)
        return Jet(self.v * c, self.g * c[..., None], self.h * c[..., None, None])

    # -- arithmetic ------------------------------------------------------
    def __neg__(self):
        return Jet(-self.v, -self.g, -self.h)

    def __pos__(self):
        return self

    def __add__(self, other):
        if isinstance(other, Jet):
            return Jet(self.v + other.v, self.g + other.g, self.h + other.h)
        return Jet(self.v + other, self.g, self.h)

    __radd__ = __add__

    def __sub__(self, other):
        if isinstance(other, Jet):
            return Jet(self.v - other.v, self.g - other.g, self.h - other.h)
        return Jet(self.v - other, self.g, self.h)

    def __rsub__(self, other):
        return Jet(other - self.v, -self.g, -self.h)

    def __mul__(self, other):
        if isinstance(other, Jet):
            a, b = self, other
            v = a.v * b.v
            g = a.v[..., None] * b.g + b.v[..., None] * a.g
            outer = a.g[..., :, None] * b.g[..., None, :]
            h = (
                a.v[..., None, None] * b.h
                + b.v[..., None, None] * a.h
                + outer
                + np.swapaxes(outer, -1, -2)
            )
            return Jet(v, g, h)
        return self._scale(other)

    __rmul__ = __mul__

    def reciprocal(self) -> "Jet":
        r = 1.0 / self.v
        return self._unary(r, -r * r, 2.0 * r * r * r)

    def __truediv__(self, other):
        if isinstance(other, Jet):
            return self * other.reciprocal()
        return self._scale(1.0 / np.asarray(other, dtype=float))

    def __rtruediv__(self, other):
        return self.reciprocal()._scale(other)

    def __pow__(self, p):
        if isinstance(p, Jet):
            return exp(p * log(self))
        p = float(p)
        if p == 0.0:
            return Jet(np.ones_like(self.v), np.zeros_like(self.g), np.zeros_like(self.h))
        if p == 1.0:
            return self
        if p.is_integer() and p > 0:
            ip = int(p)
            a = self.v
            f0 = a**ip
            f1 = ip * a ** (ip - 1)
            f2 = ip * (ip - 1) * a ** (ip - 2) if ip >= 2 else np.zeros_like(a)
            return self._unary(f0, f1, f2)
        a = self.v
        return self._unary(a**p, p * a ** (p - 1.0), p * (p - 1.0) * a ** (p - 2.0))

    def __rpow__(self, base):
        return exp(self * math.log(base))

    def __repr__(self) -> str:
        return f"Jet(v={self.v!r})"


def _lift(name, f0, f1, f2):
    npf = getattr(np, name)

    def fn(x):
        if isinstance(x, Jet):
            a = x.v
            return x._unary(f0(a), f1(a), f2(a))
        return npf(x)

    fn.__name__ = name
    return fn


sin = _lift("sin", np.sin, np.cos, lambda a: -np.sin(a))
cos = _lift("cos", np.cos, lambda a: -np.sin(a), lambda a: -np.cos(a))
exp = _lift("exp", np.exp, np.exp, np.exp)
sinh = _lift("sinh", np.sinh, np.cosh, np.sinh)
cosh = _lift("cosh", np.cosh, np.sinh, np.cosh)
log = _lift("log", np.log, lambda a: 1.0 / a, lambda a: -1.0 / (a * a))
sqrt = _lift("sqrt", np.sqrt, lambda a: 0.5 / np.sqrt(a), lambda a: -0.25 / (a * np.sqrt(a)))
tan = _lift(
    "tan",
    np.tan,
    lambda a: 1.0 / np.cos(a) ** 2,
    lambda a: 2.0 * np.tan(a) / np.cos(a) ** 2,
)
tanh = _lift(
    "tanh",
    np.tanh,
    lambda a: 1.0 - np.tanh(a) ** 2,
    lambda a: -2.0 * np.tanh(a) * (1.0 - np.tanh(a) ** 2),
)
arctan = _lift(
    "arctan",
    np.arctan,
    lambda a: 1.0 / (1.0 + a * a),
    lambda a: -2.0 * a / (1.0 + a * a) ** 2,
)


def parts(value, batch_shape, k):
    """Return ``(v, g, h)`` arrays for a jet or a constant."""
    if isinstance(value, Jet):
        return (
            np.broadcast_to(value.v, batch_shape),
            np.broadcast_to(value.g, batch_shape + (k,)),
            np.broadcast_to(value.h, batch_shape + (k, k)),
        )
    v = np.broadcast_to(np.asarray(value, dtype=float), batch_shape)
    return v, np.zeros(batch_shape + (k,)), np.zeros(batch_shape + (k, k))


def stack(values: Sequence, x: np.ndarray):
    """Stack jets/constants evaluated on seeds from ``x`` into dense arrays.

    Returns ``(v, g, h)`` with shapes ``batch + (m,)``, ``batch + (m, k)``
    and ``batch + (m, k, k)``.
    """
    x = np.asarray(x, dtype=float)
    batch, k = x.shape[:-1], x.shape[-1]
    vs, gs, hs = zip(*(parts(val, batch, k) for val in values))
    return np.stack(vs, axis=-1), np.stack(gs, axis=-2), np.stack(hs, axis=-3)


# -- expression grammar --------------------------------------------------

FUNCTIONS: dict[str, Callable] = {
    "sin": sin,
    "cos": cos,
    "tan": tan,
    "exp": exp,
    "log": log,
    "sqrt": sqrt,
    "sinh": sinh,
    "cosh": cosh,
    "tanh": tanh,
    "arctan": arctan,
}
CONSTANTS = {"pi": math.pi, "e": math.e}

_ALLOWED_NODES = (
    ast.Expression,
    ast.BinOp,
    ast.UnaryOp,
    ast.Call,
    ast.Name,
    ast.Load,
    ast.Constant,
    ast.Add,
    ast.Sub,
    ast.Mult,
    ast.Div,
    ast.Pow,
    ast.USub,
    ast.UAdd,
)


class Expression:
    """A compiled scalar expression over named variables.

    >>> Expression("1 + r**2/4", ["r"])(2.0)
    2.0
    """

    def __init__(self, source: str, variables: Sequence[str]):
        self.source = str(source)
        self.variables = tuple(variables)
        try:
            tree = ast.parse(self.source, mode="eval")
        except SyntaxError as exc:
            raise ConfigError(f"cannot parse expression {source!r}: {exc.msg}") from None
        for node in ast.walk(tree):
            if not isinstance(node, _ALLOWED_NODES):
                raise ConfigError(
                    f"expression {source!r}: construct {type(node).__name__} not allowed"
                )
            if isinstance(node, ast.Call):
                if not isinstance(node.func, ast.Name) or node.func.id not in FUNCTIONS:
                    raise ConfigError(f"expression {source!r}: unknown function")
                if node.keywords or len(node.args) != 1:
                    raise ConfigError(f"expression {source!r}: functions take one argument")
            if isinstance(node, ast.Name) and not isinstance(getattr(node, "ctx", None), ast.Load):
                raise ConfigError(f"expression {source!r}: bad name usage")
            if isinstance(node, ast.Constant) and not isinstance(node.value, (int, float)):
                raise ConfigError(f"expression {source!r}: only numeric literals allowed")
        known = set(FUNCTIONS) | set(CONSTANTS) | set(self.variables)
        for node in ast.walk(tree):
            if isinstance(node, ast.Name) and node.id not in known:
                raise ConfigError(
                    f"expression {source!r}: unknown name {node.id!r} "
                    f"(allowed variables: {', '.join(self.variables)})"
                )
        self._code = compile(tree, "<expression>", "eval")

    def __call__(self, *values):
        if len(values) != len(self.variables):
            raise TypeError(f"expected {len(self.variables)} values, got {len(values)}")
        env = dict(FUNCTIONS)
        env.update(CONSTANTS)
        env.update(zip(self.variables, values))
        return eval(self._code, {"__builtins__": {}}, env)

    def __repr__(self) -> str:
        return f"Expression({self.source!r})"

"""Scalar coefficient fields ``g(t, x)`` with optional analytic gradients."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .expression import ExpressionTree, parse_expression

GROWTH_CLASSES = ("bounded", "linear", "polynomial")

FD_STEP = 1e-4


def _as_points(X):
    X = np.asarray(X, dtype=np.float64)
    if X.ndim == 1:
        X = X[None, :]
    return X


def central_gradient(func, t, X, step=FD_STEP):
    """Central differences of ``func(t, X)`` with per-point step ``step*(1+|x|)``."""
    X = _as_points(X)
    n, d = X.shape
    h = step * (1.0 + np.linalg.norm(X, axis=1))
    out = np.empty((n, d))
    for k in range(d):
        Xp = X.copy()
        Xm = X.copy()
        Xp[:, k] += h
        Xm[:, k] -= h
        # use the realised step so rounding in x +/- h does not bias the quotient
        out[:, k] = (func(t, Xp) - func(t, Xm)) / (Xp[:, k] - Xm[:, k])
    return out


@dataclass(frozen=True)
class CoefficientField:
    """One scalar coefficient.

    ``func(t, X)`` maps a time and an (n, d) array of points to (n,) values;
    ``grad`` (optional) returns the (n, d) spatial gradient.
    """

    func: Callable
    grad: Optional[Callable] = None
    growth: str = "bounded"
    degree: int = 0
    text: Optional[str] = None
    const: Optional[float] = None

    def __post_init__(self):
        if self.growth not in GROWTH_CLASSES:
            raise ValueError(f"unknown growth class {self.growth!r}")

    def __call__(self, t, X):
        X = _as_points(X)
        return np.asarray(self.func(t, X), dtype=np.float64).reshape(X.shape[0])

    @property
    def is_constant(self):
        return self.const is not None

    @property
    def has_gradient(self):
        return self.grad is not None

    def gradient(self, t, X):
        X = _as_points(X)
        if self.const is not None:
            return np.zeros_like(X)
        if self.grad is not None:
            return np.asarray(self.grad(t, X), dtype=np.float64).reshape(X.shape)
        return central_gradient(self.__call__, t, X)

    def fd_gradient(self, t, X, step=FD_STEP):
        return central_gradient(self.__call__, t, X, step)


# ---------------------------------------------------------------- builders


def constant(value, d=None):
    value = float(value)
    return CoefficientField(
        func=lambda t, X: np.full(X.shape[0], value),
        grad=lambda t, X: np.zeros_like(X),
        growth="bounded",
        text=repr(value),
        const=value,
    )


def linear(weights, offset=0.0):
    """``offset + w . x``"""
    w = np.asarray(weights, dtype=np.float64)
    offset = float(offset)
    return CoefficientField(
        func=lambda t, X: offset + X @ w,
        grad=lambda t, X: np.broadcast_to(w, X.shape).copy(),
        growth="linear" if np.any(w != 0) else "bounded",
        degree=1,
    )


def coordinate(k, scale=1.0, offset=0.0):
    """``offset + scale * x_k`` (k is 0-based)."""

    def func(t, X):
        return offset + scale * X[:, k]

    def grad(t, X):
        g = np.zeros_like(X)
        g[:, k] = scale
        return g

    return CoefficientField(func=func, grad=grad, growth="linear" if scale else "bounded", degree=1)


def radial_power(scale=1.0, power=2, offset=0.0):
    """``offset + scale * |x|^power`` for an even integer ``power`` (polynomial of degree ``power``)."""
    power = int(power)
    if power < 0 or power % 2:
        raise ValueError("power must be a nonnegative even integer")

    def func(t, X):
        r2 = np.einsum("ij,ij->i", X, X)
        return offset + scale * r2 ** (power // 2)

    def grad(t, X):
        if power == 0:
            return np.zeros_like(X)
        r2 = np.einsum("ij,ij->i", X, X)
        return (scale * power * r2 ** (power // 2 - 1))[:, None] * X

    growth = "bounded" if power == 0 or scale == 0 else ("linear" if power == 1 else "polynomial")
    return CoefficientField(func=func, grad=grad, growth=growth, degree=power)


def tanh_field(scale=1.0, axis=0, amplitude=1.0):
    """``amplitude * tanh(scale * x_axis)``: bounded, smooth, steep for large ``scale``."""

    def func(t, X):
        return amplitude * np.tanh(scale * X[:, axis])

    def grad(t, X):
        g = np.zeros_like(X)
        g[:, axis] = amplitude * scale / np.cosh(scale * X[:, axis]) ** 2
        return g

    return CoefficientField(func=func, grad=grad, growth="bounded")


def linear_growth(slope=1.0, offset=1.0):
    """``slope * (offset + |x|)``, Lipschitz with linear growth."""

    def func(t, X):
        return slope * (offset + np.linalg.norm(X, axis=1))

    def grad(t, X):
        r = np.linalg.norm(X, axis=1)
        safe = np.where(r > 0, r, 1.0)
        return np.where((r > 0)[:, None], slope * X / safe[:, None], 0.0)

    return CoefficientField(func=func, grad=grad, growth="linear", degree=1)


def from_expression(src, d, growth="bounded", degree=0):
    tree = parse_expression(src, d) if isinstance(src, str) else src
    if not isinstance(tree, ExpressionTree):
        raise TypeError("expected an expression string or ExpressionTree")
    const = None
    if not tree.variables():
        const = float(tree.evaluate(0.0, np.zeros((1, d)))[0])
    return CoefficientField(func=tree.evaluate, growth=growth, degree=degree, text=tree.to_text(), const=const)


def scaled(field: CoefficientField, factor: float):
    factor = float(factor)
    grad = None
    if field.grad is not None:
        grad = lambda t, X: factor * field.grad(t, X)  # noqa: E731
    const = None if field.const is None else factor * field.const
    text = None if field.text is None else f"({repr(factor)} * {field.text})"
    return CoefficientField(
        func=lambda t, X: factor * field(t, X),
        grad=grad,
        growth=field.growth if factor else "bounded",
        degree=field.degree,
        text=text,
        const=const,
    )


def plus_constant(field: CoefficientField, value: float):
    value = float(value)
    const = None if field.const is None else field.const + value
    text = None if field.text is None else f"({field.text} + {repr(value)})"
    return CoefficientField(
        func=lambda t, X: field(t, X) + value,
        grad=field.grad,
        growth=field.growth,
        degree=field.degree,
        text=text,
        const=const,
    )


def combine(fields, weights):
    """Linear combination ``sum w_i g_i``."""
    fields = list(fields)
    weights = [float(w) for w in weights]
    if len(fields) != len(weights):
        raise ValueError("fields and weights differ in length")

    def func(t, X):
        out = np.zeros(X.shape[0])
        for w, g in zip(weights, fields):
            out = out + w * g(t, X)
        return out

    grad = None
    if all(g.grad is not None or g.const is not None for g in fields):

        def grad(t, X):
            out = np.zeros_like(X)
            for w, g in zip(weights, fields):
                out = out + w * g.gradient(t, X)
            return out

    rank = {"bounded": 0, "linear": 1, "polynomial": 2}
    growth = max((g.growth for g in fields), key=rank.__getitem__, default="bounded")
    const = None
    if all(g.const is not None for g in fields):
        const = sum(w * g.const for w, g in zip(weights, fields))
    return CoefficientField(
        func=func,
        grad=grad,
        growth=growth,
        degree=max((g.degree for g in fields), default=0),
        const=const,
    )

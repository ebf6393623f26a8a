"""Closed-form reference solutions, written independently of the solvers.

The constant-coefficient problem ``D_t u + a Lap u - c u = 0``, ``u(T) = h`` has
``u(t, x) = exp(-c tau) E[h(x + sqrt(2 a tau) Z)]`` with ``tau = T - t``.
"""

import math

import numpy as np

_NODES, _WEIGHTS = np.polynomial.hermite_e.hermegauss(160)
_WEIGHTS = _WEIGHTS / _WEIGHTS.sum()


def _tau(t, T):
    tau = T - np.asarray(t, dtype=np.float64)
    if np.any(tau < 0):
        raise ValueError("t beyond the horizon")
    return tau


def heat_square(t, x, T=1.0, a=1.0, c=1.0):
    """``exp(-c tau) (|x|^2 + 2 a d tau)`` for ``h = |x|^2``; ``x`` has shape (n, d) or (n,)."""
    X = np.asarray(x, dtype=np.float64)
    X = X[:, None] if X.ndim == 1 else X
    tau = _tau(t, T)
    return np.exp(-c * tau) * ((X**2).sum(axis=1) + 2.0 * a * X.shape[1] * tau)


def heat_square_gradient(t, x, T=1.0, a=1.0, c=1.0):
    X = np.asarray(x, dtype=np.float64)
    X = X[:, None] if X.ndim == 1 else X
    return 2.0 * X * np.exp(-c * _tau(t, T))


def heat_weight(t, x, T=1.0, a=1.0, c=1.0):
    """``h = 1 + |x|^2``."""
    return heat_square(t, x, T, a, c) + np.exp(-c * _tau(t, T))


def constant(t, K=1.0, c=1.0, T=1.0):
    return K * np.exp(-c * _tau(t, T))


def gaussian_smoothing(h, t, x, T=1.0, a=1.0, c=0.0):
    """``exp(-c tau) E[h(x + sqrt(2 a tau) Z)]`` in one dimension by Gauss-Hermite quadrature."""
    x = np.asarray(x, dtype=np.float64).reshape(-1)
    tau = float(_tau(t, T))
    s = math.sqrt(2.0 * a * tau)
    return math.exp(-c * tau) * (h(x[:, None] + s * _NODES[None, :]) @ _WEIGHTS)


def tanh_derivatives(k):
    """``tanh(k x)`` and its first three derivatives."""

    def d0(y):
        return np.tanh(k * y)

    def d1(y):
        return k / np.cosh(k * y) ** 2

    def d2(y):
        th = np.tanh(k * y)
        return -2.0 * k * k * th / np.cosh(k * y) ** 2

    def d3(y):
        th = np.tanh(k * y)
        sech2 = 1.0 / np.cosh(k * y) ** 2
        return -2.0 * k**3 * sech2 * (sech2 - 2.0 * th * th)

    return d0, d1, d2, d3


def heat_tanh(t, x, k=1.0, T=1.0, a=1.0, c=0.0, order=0):
    """``D^order`` of the heat solution with ``h = tanh(k x)``."""
    return gaussian_smoothing(tanh_derivatives(k)[order], t, x, T, a, c)

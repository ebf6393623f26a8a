"""Registry of built-in problem families with analytic gradients."""

from __future__ import annotations

import math

from . import fields as F
from .spec import ProblemSpec

FAMILIES = {}


def register(name):
    def deco(builder):
        FAMILIES[name] = builder
        return builder

    return deco


def build_family(family, **params) -> ProblemSpec:
    try:
        builder = FAMILIES[family]
    except KeyError:
        raise ValueError(f"unknown family {family!r}; known: {sorted(FAMILIES)}") from None
    return builder(**params)


def _diagonal(d, fields_on_diag):
    zero = F.constant(0.0)
    return tuple(tuple(fields_on_diag[i] if i == k else zero for k in range(d)) for i in range(d))


def _terminal(kind, d, K=1.0, scale=1.0, power=2):
    if kind == "square":
        return F.radial_power(1.0, 2), 1
    if kind == "power":
        return F.radial_power(1.0, int(power), offset=0.0), int(power) // 2
    if kind == "weight":
        # h = 1 + |x|^power, i.e. the weight itself
        return F.radial_power(1.0, int(power), offset=1.0), int(power) // 2
    if kind == "tanh":
        return F.tanh_field(scale=scale, axis=0), 0
    if kind == "constant":
        return F.constant(K), 0
    if kind == "zero":
        return F.constant(0.0), 0
    raise ValueError(f"unknown terminal kind {kind!r}")


def _params(**kw):
    return {k: v for k, v in kw.items()}


@register("heat")
def heat(d=1, a=1.0, c=1.0, T=1.0, t0=0.0, terminal="square", K=1.0, scale=1.0, power=2, name=None):
    """``b = 0``, ``sigma = sqrt(2a) I`` (so ``a_ii = a``), constant ``c``, ``f = 0``.

    With ``terminal="square"`` the solution is ``exp(-c (T-t)) (|x|^2 + 2 a d (T-t))``.
    """
    d = int(d)
    s = math.sqrt(2.0 * float(a))
    h, q = _terminal(terminal, d, K=K, scale=scale, power=power)
    return ProblemSpec(
        d=d,
        m=d,
        T=float(T),
        t0=float(t0),
        drift=tuple(F.constant(0.0) for _ in range(d)),
        diffusion=_diagonal(d, [F.constant(s)] * d),
        potential=F.constant(c),
        source=F.constant(0.0),
        terminal=h,
        c0=float(c),
        q=q,
        delta=float(a),
        name=name or f"heat[{terminal}]",
        family={"name": "heat", "params": _params(d=d, a=a, c=c, T=T, t0=t0, terminal=terminal, K=K, scale=scale, power=power)},
    )


@register("constant")
def constant_data(d=1, K=1.0, c=1.0, sigma=1.0, drift=0.0, source=0.0, T=1.0, t0=0.0, name=None):
    """Constant coefficients and constant data; ``u = K e^{-c(T-t)}`` when ``source = 0``."""
    d = int(d)
    return ProblemSpec(
        d=d,
        m=d,
        T=float(T),
        t0=float(t0),
        drift=tuple(F.constant(drift) for _ in range(d)),
        diffusion=_diagonal(d, [F.constant(sigma)] * d),
        potential=F.constant(c),
        source=F.constant(source),
        terminal=F.constant(K),
        c0=float(c),
        q=0,
        delta=0.5 * float(sigma) ** 2,
        name=name or "constant",
        family={"name": "constant", "params": _params(d=d, K=K, c=c, sigma=sigma, drift=drift, source=source, T=T, t0=t0)},
    )


@register("ornstein_uhlenbeck")
def ornstein_uhlenbeck(d=1, theta=1.0, mu=0.0, sigma=1.0, c=1.0, T=1.0, t0=0.0, terminal="square", K=1.0, scale=1.0, power=2, name=None):
    """Mean-reverting drift ``theta (mu - x)`` with additive noise."""
    d = int(d)
    h, q = _terminal(terminal, d, K=K, scale=scale, power=power)
    return ProblemSpec(
        d=d,
        m=d,
        T=float(T),
        t0=float(t0),
        drift=tuple(F.coordinate(i, -float(theta), float(theta) * float(mu)) for i in range(d)),
        diffusion=_diagonal(d, [F.constant(sigma)] * d),
        potential=F.constant(c),
        source=F.constant(0.0),
        terminal=h,
        c0=float(c),
        q=q,
        delta=0.5 * float(sigma) ** 2,
        name=name or "ornstein_uhlenbeck",
        family={"name": "ornstein_uhlenbeck", "params": _params(d=d, theta=theta, mu=mu, sigma=sigma, c=c, T=T, t0=t0, terminal=terminal, K=K, scale=scale, power=power)},
    )


@register("geometric")
def geometric(d=1, mu=0.1, sigma=0.2, c=0.0, T=1.0, t0=0.0, terminal="square", K=1.0, scale=1.0, power=2, name=None):
    """``b = mu x``, ``sigma = s x`` componentwise (multiplicative noise, degenerate at 0)."""
    d = int(d)
    h, q = _terminal(terminal, d, K=K, scale=scale, power=power)
    return ProblemSpec(
        d=d,
        m=d,
        T=float(T),
        t0=float(t0),
        drift=tuple(F.coordinate(i, float(mu)) for i in range(d)),
        diffusion=_diagonal(d, [F.coordinate(i, float(sigma)) for i in range(d)]),
        potential=F.constant(c),
        source=F.constant(0.0),
        terminal=h,
        c0=float(c),
        q=q,
        name=name or "geometric",
        family={"name": "geometric", "params": _params(d=d, mu=mu, sigma=sigma, c=c, T=T, t0=t0, terminal=terminal, K=K, scale=scale, power=power)},
    )


@register("linear_growth")
def linear_growth(d=1, mu=-0.5, slope=0.3, c=1.0, T=1.0, t0=0.0, terminal="square", K=1.0, scale=1.0, power=2, name=None):
    """``b = mu x`` and ``sigma = slope (1 + |x|) I``: uniformly elliptic with linear growth."""
    d = int(d)
    h, q = _terminal(terminal, d, K=K, scale=scale, power=power)
    return ProblemSpec(
        d=d,
        m=d,
        T=float(T),
        t0=float(t0),
        drift=tuple(F.coordinate(i, float(mu)) for i in range(d)),
        diffusion=_diagonal(d, [F.linear_growth(float(slope))] * d),
        potential=F.constant(c),
        source=F.constant(0.0),
        terminal=h,
        c0=float(c),
        q=q,
        delta=0.5 * float(slope) ** 2,
        name=name or "linear_growth",
        family={"name": "linear_growth", "params": _params(d=d, mu=mu, slope=slope, c=c, T=T, t0=t0, terminal=terminal, K=K, scale=scale, power=power)},
    )


@register("polynomial")
def polynomial(d=1, q=1, theta=0.5, sigma=1.0, c=1.0, c_amplitude=0.2, source_scale=0.5, T=1.0, t0=0.0, name=None):
    """OU drift, bounded smooth potential ``c + amp tanh(x1)`` and data of growth ``2q``.

    ``h = 1 + |x|^{2q}`` and ``f = source_scale |x|^{2q}``.
    """
    d = int(d)
    q = int(q)
    pot = F.combine([F.constant(c), F.tanh_field(1.0, 0)], [1.0, float(c_amplitude)])
    return ProblemSpec(
        d=d,
        m=d,
        T=float(T),
        t0=float(t0),
        drift=tuple(F.coordinate(i, -float(theta)) for i in range(d)),
        diffusion=_diagonal(d, [F.constant(sigma)] * d),
        potential=pot,
        source=F.radial_power(float(source_scale), 2 * q),
        terminal=F.radial_power(1.0, 2 * q, offset=1.0),
        c0=float(c) - abs(float(c_amplitude)),
        q=q,
        delta=0.5 * float(sigma) ** 2,
        name=name or f"polynomial[q={q}]",
        family={"name": "polynomial", "params": _params(d=d, q=q, theta=theta, sigma=sigma, c=c, c_amplitude=c_amplitude, source_scale=source_scale, T=T, t0=t0)},
    )


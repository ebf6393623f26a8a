"""The Cauchy problem description and its coefficient evaluators."""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field
from typing import Optional, Tuple

import numpy as np

from .. import weights
from .fields import CoefficientField, central_gradient, constant, plus_constant, scaled


def _points(X, d):
    X = np.asarray(X, dtype=np.float64)
    if X.ndim == 1:
        X = X[None, :]
    if X.shape[1] != d:
        raise ValueError(f"points have dimension {X.shape[1]}, problem has d={d}")
    return X


@dataclass(frozen=True)
class ProblemSpec:
    """Coefficients, data and constants of one backward Cauchy problem.

    The equation is ``D_t u + sum a_ij D_ij u + sum b_i D_i u - c u + f = 0`` on
    ``[t0, T)`` with ``u(T, .) = h`` and ``a = sigma sigma^T / 2``.

    ``gamma`` and ``weight_q`` record the zeroth-order shift and the weight
    transform; all evaluators apply them, so the base fields stay untouched.
    """

    d: int
    m: int
    T: float
    drift: Tuple[CoefficientField, ...]
    diffusion: Tuple[Tuple[CoefficientField, ...], ...]
    potential: CoefficientField
    source: CoefficientField
    terminal: CoefficientField
    t0: float = 0.0
    c0: float = 0.0
    q: int = 0
    delta: Optional[float] = None
    name: str = "problem"
    family: Optional[dict] = field(default=None, compare=False)
    gamma: float = 0.0
    weight_q: int = 0

    def __post_init__(self):
        if self.d < 1 or self.m < 1:
            raise ValueError("dimensions d and m must be positive")
        if not (0.0 <= self.t0 < self.T < math.inf):
            raise ValueError(f"need 0 <= t0 < T < inf, got t0={self.t0}, T={self.T}")
        if int(self.q) != self.q or self.q < 0:
            raise ValueError(f"q must be a nonnegative integer, got {self.q!r}")
        if int(self.weight_q) != self.weight_q or self.weight_q < 0:
            raise ValueError("weight_q must be a nonnegative integer")
        if len(self.drift) != self.d:
            raise ValueError(f"drift has {len(self.drift)} entries, expected d={self.d}")
        if len(self.diffusion) != self.d or any(len(row) != self.m for row in self.diffusion):
            raise ValueError(f"diffusion must be a {self.d}x{self.m} array of fields")
        if self.delta is not None and self.delta < 0:
            raise ValueError("delta must be nonnegative")

    # ------------------------------------------------------------ base evaluators

    def _base_b(self, t, X):
        return np.stack([g(t, X) for g in self.drift], axis=1)

    def _base_sigma(self, t, X):
        n = X.shape[0]
        out = np.empty((n, self.d, self.m))
        for i, row in enumerate(self.diffusion):
            for k, g in enumerate(row):
                out[:, i, k] = g(t, X)
        return out

    def _base_a(self, t, X):
        return half_outer(self._base_sigma(t, X))

    def _weight_terms(self, X):
        P = weights.weight_values(self.weight_q, X)
        return P, weights.weight_gradient(self.weight_q, X) / P[:, None], weights.weight_hessian(
            self.weight_q, X
        ) / P[:, None, None]

    # ------------------------------------------------------------ public evaluators

    def b(self, t, X):
        """Drift, shape (n, d)."""
        X = _points(X, self.d)
        out = self._base_b(t, X)
        if self.weight_q:
            _, gP, _ = self._weight_terms(X)
            out = out + 2.0 * np.einsum("nij,nj->ni", self._base_a(t, X), gP)
        return out

    def sigma(self, t, X):
        """Diffusion matrix, shape (n, d, m)."""
        return self._base_sigma(t, _points(X, self.d))

    def a(self, t, X):
        """``sigma sigma^T / 2``, shape (n, d, d), symmetric by construction."""
        return half_outer(self.sigma(t, X))

    def c(self, t, X):
        X = _points(X, self.d)
        out = self.potential(t, X)
        if self.weight_q:
            _, gP, HP = self._weight_terms(X)
            out = (
                out
                - np.einsum("nij,nij->n", self._base_a(t, X), HP)
                - np.einsum("ni,ni->n", self._base_b(t, X), gP)
            )
        if self.gamma:
            out = out - self.gamma
        return out

    def f(self, t, X):
        X = _points(X, self.d)
        out = self.source(t, X)
        if self.weight_q:
            out = out / weights.weight_values(self.weight_q, X)
        if self.gamma:
            out = out * math.exp(self.gamma * (self.T - t))
        return out

    def h(self, X):
        X = _points(X, self.d)
        out = self.terminal(self.T, X)
        if self.weight_q:
            out = out / weights.weight_values(self.weight_q, X)
        return out

    # ------------------------------------------------------------ gradients

    def grad_b(self, t, X):
        """``out[n, i, j] = D_j b_i``."""
        X = _points(X, self.d)
        if self.weight_q:
            return np.stack(
                [central_gradient(lambda s, Y, i=i: self.b(s, Y)[:, i], t, X) for i in range(self.d)],
                axis=1,
            )
        return np.stack([g.gradient(t, X) for g in self.drift], axis=1)

    def grad_sigma(self, t, X):
        """``out[n, i, k, j] = D_j sigma_ik``."""
        X = _points(X, self.d)
        out = np.empty((X.shape[0], self.d, self.m, self.d))
        for i, row in enumerate(self.diffusion):
            for k, g in enumerate(row):
                out[:, i, k, :] = g.gradient(t, X)
        return out

    def grad_c(self, t, X):
        X = _points(X, self.d)
        if self.weight_q:
            return central_gradient(self.c, t, X)
        return self.potential.gradient(t, X)

    def grad_f(self, t, X):
        X = _points(X, self.d)
        if self.weight_q:
            return central_gradient(self.f, t, X)
        out = self.source.gradient(t, X)
        if self.gamma:
            out = out * math.exp(self.gamma * (self.T - t))
        return out

    def grad_h(self, X):
        X = _points(X, self.d)
        if self.weight_q:
            return central_gradient(lambda s, Y: self.h(Y), self.T, X)
        return self.terminal.gradient(self.T, X)

    # ------------------------------------------------------------ structure

    @property
    def source_is_zero(self):
        return self.source.const == 0.0

    @property
    def diffusion_is_constant(self):
        return all(g.is_constant for row in self.diffusion for g in row)

    @property
    def drift_is_constant(self):
        return all(g.is_constant for g in self.drift)

    @property
    def potential_is_constant(self):
        return self.potential.is_constant and not self.weight_q

    def describe(self):
        out = {"name": self.name, "d": self.d, "m": self.m, "T": self.T, "t0": self.t0, "c0": self.c0, "q": self.q}
        if self.gamma:
            out["gamma"] = self.gamma
        if self.weight_q:
            out["weight_q"] = self.weight_q
        if self.family is not None:
            out["family"] = self.family
        return out


def half_outer(sig):
    """``a_ij = 1/2 sum_k sigma_ik sigma_jk`` filled for i <= j and mirrored."""
    n, d, m = sig.shape
    a = np.empty((n, d, d))
    for i in range(d):
        for j in range(i, d):
            acc = sig[:, i, 0] * sig[:, j, 0]
            for k in range(1, m):
                acc = acc + sig[:, i, k] * sig[:, j, k]
            a[:, i, j] = 0.5 * acc
            a[:, j, i] = a[:, i, j]
    return a


def evaluate_coefficients(spec: ProblemSpec, t, x):
    """All coefficients at one point ``x`` (shape (d,)) or a batch (n, d)."""
    X = np.asarray(x, dtype=np.float64)
    single = X.ndim == 1
    X = _points(X, spec.d)
    out = {
        "b": spec.b(t, X),
        "sigma": spec.sigma(t, X),
        "a": spec.a(t, X),
        "c": spec.c(t, X),
        "f": spec.f(t, X),
    }
    if single:
        out = {k: v[0] for k, v in out.items()}
        out["c"] = float(out["c"])
        out["f"] = float(out["f"])
    return out


def shift_zeroth_order(spec: ProblemSpec, gamma: float) -> ProblemSpec:
    """Potential ``c - gamma`` and source ``exp(gamma (T - t)) f``; ``h`` unchanged.

    If ``w`` solves the shifted problem then ``u = exp(-gamma (T - t)) w``.
    """
    gamma = float(gamma)
    if gamma == 0.0:
        return spec
    return dataclasses.replace(spec, gamma=spec.gamma + gamma, c0=spec.c0 - gamma)


def unshift_factor(spec: ProblemSpec, gamma: float, t):
    """Factor that maps a shifted solution at time ``t`` back to the original one."""
    return np.exp(-float(gamma) * (spec.T - np.asarray(t, dtype=np.float64)))


def scale_data(spec: ProblemSpec, factor: float) -> ProblemSpec:
    """Multiply the data ``h`` and ``f`` by ``factor`` (the solution scales the same way)."""
    return dataclasses.replace(
        spec,
        terminal=scaled(spec.terminal, factor),
        source=scaled(spec.source, factor),
        family=None,
    )


def corrupt_potential(spec: ProblemSpec, amount: float) -> ProblemSpec:
    return dataclasses.replace(spec, potential=plus_constant(spec.potential, amount), family=None)


def with_data(spec: ProblemSpec, terminal=None, source=None, potential=None, **kw) -> ProblemSpec:
    changes = dict(kw)
    if terminal is not None:
        changes["terminal"] = terminal
    if source is not None:
        changes["source"] = source
    if potential is not None:
        changes["potential"] = potential
    changes.setdefault("family", None)
    return dataclasses.replace(spec, **changes)


def zero_field():
    return constant(0.0)


def sample_box_points(d, lower, upper, n, seed=0):
    """Deterministic sample of a box: corners, centre, origin (if inside) and uniform points."""
    lower = np.broadcast_to(np.asarray(lower, dtype=np.float64), (d,))
    upper = np.broadcast_to(np.asarray(upper, dtype=np.float64), (d,))
    pts = []
    if d <= 10:
        corners = np.array(np.meshgrid(*[[lo, hi] for lo, hi in zip(lower, upper)], indexing="ij"))
        pts.append(corners.reshape(d, -1).T)
    pts.append(((lower + upper) / 2)[None, :])
    if np.all(lower <= 0) and np.all(upper >= 0):
        pts.append(np.zeros((1, d)))
    rng = np.random.default_rng(seed)
    pts.append(lower + (upper - lower) * rng.random((int(n), d)))
    return np.concatenate(pts, axis=0)


def sampled_min_potential(spec: ProblemSpec, radius=10.0, n=4096, n_times=5):
    X = sample_box_points(spec.d, -radius, radius, n)
    if spec.d == 1:
        X = np.concatenate([X, np.linspace(-radius, radius, 2001)[:, None]])
    times = np.linspace(spec.t0, spec.T, n_times)
    return float(min(spec.c(t, X).min() for t in times))

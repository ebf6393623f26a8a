"""Polynomially weighted sup and Hölder norms evaluated on finite sample clouds."""

from __future__ import annotations

import dataclasses
import enum
import json
import math
from dataclasses import dataclass, field
from typing import Dict, Optional

import numpy as np
from scipy.stats import qmc

from . import kernels
from .fd import multi_indices, spatial_derivative
from .problem.spec import ProblemSpec, sampled_min_potential
from .weights import weight_gradient, weight_hessian, weight_values

EXHAUSTIVE_LIMIT = 10_000


class Variant(str, enum.Enum):
    STANDARD = "STANDARD"  # derivatives of f / P
    TRIPLE_BAR = "TRIPLE_BAR"  # derivatives of f, divided by P


class MissingDerivativeError(ValueError):
    pass


def weight(q, x):
    """``P(x) = 1 + |x|^(2q)``; 1 for q = 0.  Scalar for one point, array for an (n, d) array."""
    X = np.asarray(x, dtype=np.float64)
    if X.ndim == 0:
        X = X.reshape(1, 1)
        return float(weight_values(q, X)[0])
    if X.ndim == 1:
        return float(weight_values(q, X[None, :])[0])
    return weight_values(q, X)


# ---------------------------------------------------------------- clouds


@dataclass(frozen=True)
class Cloud:
    points: np.ndarray
    descriptor: dict

    def __len__(self):
        return self.points.shape[0]


def tensor_cloud(d, radius, n_per_axis):
    axes = [np.linspace(-radius, radius, n_per_axis)] * d
    mesh = np.meshgrid(*axes, indexing="ij")
    pts = np.stack([m.reshape(-1) for m in mesh], axis=1)
    return Cloud(pts, {"kind": "tensor", "d": d, "radius": float(radius), "n_per_axis": int(n_per_axis)})


def sobol_cloud(d, radius, n, seed=0):
    """Scrambled Sobol points in ``[-radius, radius]^d`` (``n`` rounded up to a power of 2)."""
    m = max(1, math.ceil(math.log2(max(n, 2))))
    pts = qmc.Sobol(d, scramble=True, seed=seed).random_base2(m)
    pts = qmc.scale(pts, [-radius] * d, [radius] * d)
    return Cloud(pts, {"kind": "sobol", "d": d, "radius": float(radius), "n": int(2**m), "seed": int(seed)})


def mixed_cloud(d, radius, n_per_axis, n_fill, seed=0):
    """Tensor grid plus low-discrepancy fill, duplicates dropped."""
    a, b = tensor_cloud(d, radius, n_per_axis), sobol_cloud(d, radius, n_fill, seed)
    pts = np.unique(np.concatenate([a.points, b.points]), axis=0)
    return Cloud(pts, {"kind": "mixed", "tensor": a.descriptor, "fill": b.descriptor, "n": int(pts.shape[0])})


def cloud_from_points(points, label="custom"):
    pts = np.atleast_2d(np.asarray(points, dtype=np.float64))
    if pts.shape[0] == 1 and pts.shape[1] > 1 and np.asarray(points).ndim == 1:
        pts = pts.T
    return Cloud(pts, {"kind": label, "n": int(pts.shape[0]), "d": int(pts.shape[1])})


# ---------------------------------------------------------------- Hölder seminorm


def _as_cloud_points(points):
    pts = np.asarray(points, dtype=np.float64)
    if pts.ndim == 1:
        pts = pts[:, None]
    return pts


def holder_seminorm(points, values, beta, limit=EXHAUSTIVE_LIMIT, seed=0, return_pair=False):
    """``max |f(x) - f(y)| / |x - y|^beta`` over distinct sample pairs.

    Exhaustive up to ``limit`` samples.  Larger clouds use a fixed random subset of
    ``limit`` samples, so the value is a lower bound for the full cloud.
    """
    if not 0.0 < beta < 1.0 + 1e-15:
        raise ValueError("beta must lie in (0, 1]")
    pts = _as_cloud_points(points)
    vals = np.asarray(values, dtype=np.float64).reshape(-1)
    if pts.shape[0] != vals.shape[0]:
        raise ValueError("points and values differ in length")
    if pts.shape[0] < 2:
        raise ValueError("need at least two samples")
    idx = np.arange(pts.shape[0])
    if pts.shape[0] > limit:
        idx = np.sort(np.random.default_rng(seed).choice(pts.shape[0], limit, replace=False))
    best, i, j = kernels.holder_max(pts[idx], vals[idx], float(beta))
    if return_pair:
        return best, (int(idx[i]), int(idx[j]))
    return best


def holder_bruteforce(points, values, beta):
    """Reference double loop, used as an independent check."""
    pts = _as_cloud_points(points)
    vals = np.asarray(values, dtype=np.float64).reshape(-1)
    best = 0.0
    n = len(vals)
    for i in range(n):
        for j in range(i + 1, n):
            dist = math.sqrt(sum((float(pts[i, k]) - float(pts[j, k])) ** 2 for k in range(pts.shape[1])))
            if dist == 0.0:
                raise ValueError("duplicate points")
            best = max(best, abs(float(vals[i]) - float(vals[j])) / dist**beta)
    return best


# ---------------------------------------------------------------- weighted norms


def _alpha_key(alpha):
    return "D" + "".join(str(k) for k in alpha)


def _inverse_weight_derivatives(q, X):
    """1/P and its first and second derivatives at X."""
    P = weight_values(q, X)
    g = weight_gradient(q, X)
    H = weight_hessian(q, X)
    inv = 1.0 / P
    d1 = -g / P[:, None] ** 2
    d2 = -H / P[:, None, None] ** 2 + 2.0 * np.einsum("ni,nj->nij", g, g) / P[:, None, None] ** 3
    return inv, d1, d2


def _axes_of(alpha):
    out = []
    for i, k in enumerate(alpha):
        out += [i] * k
    return out


def quotient_derivatives(derivs, q, X, p):
    """``D^alpha (f / P)`` for |alpha| <= p <= 2 by the Leibniz rule with closed-form weight derivatives."""
    if p > 2:
        raise ValueError("quotient derivatives implemented up to order 2")
    X = _as_cloud_points(X)
    d = X.shape[1]
    inv, d1, d2 = _inverse_weight_derivatives(q, X)
    zero = tuple([0] * d)
    f0 = derivs[zero]
    out = {zero: f0 * inv}
    if p >= 1:
        for alpha in multi_indices(d, 1):
            (i,) = _axes_of(alpha)
            out[alpha] = derivs[alpha] * inv + f0 * d1[:, i]
    if p >= 2:
        for alpha in multi_indices(d, 2):
            i, j = _axes_of(alpha)
            ei = tuple(1 if k == i else 0 for k in range(d))
            ej = tuple(1 if k == j else 0 for k in range(d))
            out[alpha] = derivs[alpha] * inv + derivs[ei] * d1[:, j] + derivs[ej] * d1[:, i] + f0 * d2[:, i, j]
    return out


@dataclass
class WeightedNormResult:
    value: float
    sup_terms: Dict[str, float]
    seminorm_terms: Dict[str, float]
    q: int
    p: int
    beta: Optional[float]
    variant: str
    cloud: dict = field(default_factory=dict)

    @property
    def terms(self):
        out = {f"sup_{k}": v for k, v in self.sup_terms.items()}
        out.update({f"holder_{k}": v for k, v in self.seminorm_terms.items()})
        return out

    def to_dict(self):
        return {
            "variant": self.variant,
            "q": self.q,
            "p": self.p,
            "beta": self.beta,
            "value": self.value,
            "terms": self.terms,
            "cloud": self.cloud,
        }

    def to_json(self):
        return json.dumps(self.to_dict(), sort_keys=True)


def weighted_norm(points, derivs, q, p, beta=None, variant=Variant.STANDARD, cloud=None, limit=EXHAUSTIVE_LIMIT):
    """Weighted ``BC^p`` norm (``beta=None``) or ``H^{p+beta}`` norm on a sample cloud.

    ``derivs`` maps per-axis count tuples ``alpha`` to values of ``D^alpha f`` at ``points``;
    every ``|alpha| <= p`` must be present.
    """
    X = _as_cloud_points(points)
    d = X.shape[1]
    variant = Variant(variant)
    needed = [a for k in range(p + 1) for a in multi_indices(d, k)]
    missing = [a for a in needed if a not in derivs]
    if missing:
        raise MissingDerivativeError(f"missing derivative data for {missing}")
    if variant is Variant.STANDARD:
        data = quotient_derivatives(derivs, q, X, p)
    else:
        P = weight_values(q, X)
        data = {a: np.asarray(derivs[a], dtype=np.float64) / P for a in needed}
    sups = {_alpha_key(a): float(np.max(np.abs(data[a]))) for a in needed}
    semis = {}
    if beta is not None:
        for a in multi_indices(d, p):
            semis[_alpha_key(a)] = float(holder_seminorm(X, data[a], beta, limit))
    value = float(sum(sups.values()) + sum(semis.values()))
    desc = cloud if cloud is not None else {"kind": "points", "n": int(X.shape[0]), "d": d}
    return WeightedNormResult(value, sups, semis, int(q), int(p), beta, variant.value, desc)


def norm_ratio(points, derivs, q, p, beta=None, cloud=None):
    """STANDARD / TRIPLE_BAR on the same cloud; nan when both vanish."""
    a = weighted_norm(points, derivs, q, p, beta, Variant.STANDARD, cloud)
    b = weighted_norm(points, derivs, q, p, beta, Variant.TRIPLE_BAR, cloud)
    if a.value == 0.0 and b.value == 0.0:
        return math.nan, a, b
    return a.value / b.value, a, b


def grid_derivatives(values, box, p, margin=None):
    """Central-difference derivatives up to order ``p`` of one spatial slice.

    Returns ``(points, derivs)`` on the nodes at least ``margin`` away from the edge.
    """
    if margin is None:
        margin = 1 if p <= 2 else 2
    d = box.d
    vals = np.asarray(values, dtype=np.float64).reshape(box.counts)
    derivs = {}
    for k in range(p + 1):
        for a in multi_indices(d, k):
            derivs[a] = spatial_derivative(vals, box.spacing, a, margin).reshape(-1)
    inner = box.shrink(margin)
    return inner.points(), derivs


def norms_record(results):
    return json.dumps([r.to_dict() for r in results], indent=2, sort_keys=True)


# ---------------------------------------------------------------- weight transform


def transform_to_bounded(spec: ProblemSpec, q: int, radius=10.0) -> ProblemSpec:
    """Problem solved by ``v = u / P`` with ``P = 1 + |x|^(2q)``.

    Drift gains ``2 a grad P / P``; the potential loses ``(a : D^2 P + b . grad P) / P``;
    ``f`` and ``h`` are divided by ``P``.  ``c0`` is reset to the sampled minimum of the
    new potential on ``[-radius, radius]^d``.
    """
    if int(q) != q or q < 0:
        raise ValueError("q must be a nonnegative integer")
    if q == 0:
        raise ValueError("q = 0 gives the identity transform; use the original problem")
    if spec.weight_q:
        raise ValueError("problem is already weight-transformed")
    out = dataclasses.replace(spec, weight_q=int(q), name=f"{spec.name}/P{q}", family=None)
    return dataclasses.replace(out, c0=sampled_min_potential(out, radius))


def weight_derivative_ratios(q, X, order):
    """``max_alpha |D^alpha P / P| * (1 + |x|^2)^(order/2)`` per point, for order 1 or 2."""
    X = _as_cloud_points(X)
    P = weight_values(q, X)
    s = 1.0 + np.einsum("ij,ij->i", X, X)
    if order == 1:
        m = np.abs(weight_gradient(q, X)).max(axis=1)
    elif order == 2:
        m = np.abs(weight_hessian(q, X)).reshape(X.shape[0], -1).max(axis=1)
    else:
        raise ValueError("order must be 1 or 2")
    return m / P * s ** (order / 2.0)

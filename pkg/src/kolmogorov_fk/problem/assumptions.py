"""Sampled checks of the structural assumptions on the coefficients.

The assumptions only ask for *some* finite constant, so every entry reports a
sampled estimate and fails only on hard evidence: a quotient that keeps growing
from the half box to the full box, a vanishing ellipticity eigenvalue, or a
potential dipping below its declared lower bound.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from enum import Enum
from typing import List, Optional

import numpy as np

from .spec import ProblemSpec, sample_box_points

# a quotient may grow at most like radius**SLACK between the half and the full box
LIPSCHITZ_GROWTH_SLACK = 0.5
# |b| + |sigma| may grow at most like radius**LINEAR_GROWTH_LIMIT (1 plus slack)
LINEAR_GROWTH_LIMIT = 1.5
HIGHER_ORDER_STEP = 1e-2


class Profile(str, Enum):
    BASIC = "basic"
    STRICT = "strict"


@dataclass
class AssumptionEntry:
    name: str
    estimate: float
    passed: bool
    violating_point: Optional[List[float]] = None
    detail: dict = field(default_factory=dict)


@dataclass
class AssumptionReport:
    profile: str
    box: list
    n_samples: int
    seed: int
    entries: List[AssumptionEntry] = field(default_factory=list)

    @property
    def passed(self):
        return all(e.passed for e in self.entries)

    def entry(self, name):
        for e in self.entries:
            if e.name == name:
                return e
        raise KeyError(name)

    def failures(self):
        return [e.name for e in self.entries if not e.passed]

    def to_dict(self):
        return asdict(self)


def _box_arrays(box, d):
    lower, upper = box
    lower = np.broadcast_to(np.asarray(lower, dtype=np.float64), (d,)).copy()
    upper = np.broadcast_to(np.asarray(upper, dtype=np.float64), (d,)).copy()
    if np.any(lower >= upper):
        raise ValueError("box must satisfy lower < upper on every axis")
    return lower, upper


def _half_box(lower, upper):
    centre = 0.5 * (lower + upper)
    return centre + 0.5 * (lower - centre), centre + 0.5 * (upper - centre)


def _growth_exponent(v_half, v_full, r_half, r_full):
    """Log-log slope between the half and full box; 0 when both values vanish."""
    if v_full <= 0 and v_half <= 0:
        return 0.0
    if v_half <= 0:
        return math.inf
    ratio = math.log(max(r_full, 1e-300) / max(r_half, 1e-300))
    if ratio < 0.05:
        return 0.0
    return math.log(v_full / v_half) / ratio


def _frob(M):
    return np.sqrt((M.reshape(M.shape[0], -1) ** 2).sum(axis=1))


def _times(spec):
    return [spec.t0, 0.5 * (spec.t0 + spec.T), spec.T]


def _bs(spec, t, X):
    return spec.b(t, X), spec.sigma(t, X)


def _lipschitz_quotient(spec, X, rng):
    n = X.shape[0]
    i = rng.integers(0, n, size=n)
    j = rng.integers(0, n, size=n)
    keep = i != j
    A, B = X[i[keep]], X[j[keep]]
    # nearby pairs resolve local slopes
    scale = 1e-3 * (1.0 + np.linalg.norm(X, axis=1, keepdims=True))
    A = np.concatenate([A, X])
    B = np.concatenate([B, X + scale * rng.standard_normal(X.shape)])
    dist = np.linalg.norm(A - B, axis=1)
    ok = dist > 0
    A, B, dist = A[ok], B[ok], dist[ok]
    best, arg = 0.0, None
    for t in _times(spec):
        bA, sA = _bs(spec, t, A)
        bB, sB = _bs(spec, t, B)
        quot = (np.linalg.norm(bA - bB, axis=1) + _frob(sA - sB)) / dist
        k = int(np.argmax(quot))
        if quot[k] > best or arg is None:
            best, arg = float(quot[k]), A[k]
    return best, arg


def _linear_growth(spec, X):
    best_q, best_m, arg = 0.0, 0.0, None
    for t in _times(spec):
        b, s = _bs(spec, t, X)
        size = np.linalg.norm(b, axis=1) + _frob(s)
        quot = size / (1.0 + np.linalg.norm(X, axis=1))
        k = int(np.argmax(quot))
        if quot[k] > best_q or arg is None:
            best_q, arg = float(quot[k]), X[k]
        best_m = max(best_m, float(size.max()))
    return best_q, best_m, arg


def _point(p):
    return None if p is None else [float(v) for v in p]


def _derivative_tensors(spec, t, X, which, step=HIGHER_ORDER_STEP):
    """Per-sample sizes of D^alpha g for |alpha| = 1, 2, 3 where g is b, sigma or c."""
    d = spec.d

    def grad(Y):
        if which == "b":
            return spec.grad_b(t, Y).reshape(Y.shape[0], -1, d)
        if which == "sigma":
            return spec.grad_sigma(t, Y).reshape(Y.shape[0], -1, d)
        return spec.grad_c(t, Y)[:, None, :]

    g1 = grad(X)
    h = step * (1.0 + np.linalg.norm(X, axis=1))
    n = X.shape[0]
    g2 = np.zeros(g1.shape + (d,))
    g3 = np.zeros(g1.shape + (d, d))
    for k in range(d):
        ek = np.zeros(d)
        ek[k] = 1.0
        Xp, Xm = X + h[:, None] * ek, X - h[:, None] * ek
        g2[..., k] = (grad(Xp) - grad(Xm)) / (2.0 * h)[:, None, None]
        for l in range(k, d):
            el = np.zeros(d)
            el[l] = 1.0
            pp = grad(X + h[:, None] * (ek + el))
            pm = grad(X + h[:, None] * (ek - el))
            mp = grad(X + h[:, None] * (el - ek))
            mm = grad(X - h[:, None] * (ek + el))
            val = (pp - pm - mp + mm) / (4.0 * h * h)[:, None, None]
            g3[..., k, l] = val
            g3[..., l, k] = val
    sizes = [np.sqrt((g.reshape(n, -1) ** 2).sum(axis=1)) for g in (g1, g2, g3)]
    return sizes


def _refinement_scan(x, step, n=8):
    """Points ``x + j h / n`` (|j| <= n) along each axis, ``h`` the coarse step at ``x``.

    A kink within one coarse step of ``x`` lies within ``h / (2n)`` of some scan point,
    where the fine-step quotient is several times the coarse one.
    """
    x = np.asarray(x, dtype=np.float64)
    h = step * (1.0 + np.linalg.norm(x))
    offs = np.arange(-n, n + 1) * h / n
    pts = [x + np.outer(offs, np.eye(x.size)[k]) for k in range(x.size)]
    return np.concatenate(pts, axis=0)


def validate_assumptions(
    spec: ProblemSpec,
    box,
    n_samples: int = 512,
    profile=Profile.BASIC,
    seed: int = 0,
) -> AssumptionReport:
    """Sample ``box`` and estimate the constants of the structural assumptions.

    ``box`` is ``(lower, upper)`` with scalars or length-d sequences.
    """
    if n_samples < 2:
        raise ValueError("n_samples must be at least 2")
    profile = Profile(profile)
    lower, upper = _box_arrays(box, spec.d)
    hl, hu = _half_box(lower, upper)
    X = sample_box_points(spec.d, lower, upper, n_samples, seed)
    Xh = sample_box_points(spec.d, hl, hu, n_samples, seed + 1)
    r_full = float(np.linalg.norm(X, axis=1).max())
    r_half = float(np.linalg.norm(Xh, axis=1).max())
    report = AssumptionReport(profile.value, [lower.tolist(), upper.tolist()], int(n_samples), int(seed))

    # A1: Lipschitz in x
    rng = np.random.default_rng(seed)
    L, L_arg = _lipschitz_quotient(spec, X, rng)
    Lh, _ = _lipschitz_quotient(spec, Xh, np.random.default_rng(seed + 1))
    expo = _growth_exponent(Lh, L, r_half, r_full)
    ok = math.isfinite(L) and expo <= LIPSCHITZ_GROWTH_SLACK
    report.entries.append(
        AssumptionEntry("A1_lipschitz", L, ok, None if ok else _point(L_arg), {"half_box": Lh, "growth_exponent": expo})
    )

    # A2: linear growth
    G, M, G_arg = _linear_growth(spec, X)
    _, Mh, _ = _linear_growth(spec, Xh)
    expo = _growth_exponent(Mh, M, r_half, r_full)
    ok = math.isfinite(G) and expo <= LINEAR_GROWTH_LIMIT
    report.entries.append(
        AssumptionEntry("A2_linear_growth", G, ok, None if ok else _point(G_arg), {"max_size": M, "half_box_max_size": Mh, "growth_exponent": expo})
    )

    # K1: ellipticity
    lam, lam_arg = math.inf, None
    for t in _times(spec):
        ev = np.linalg.eigvalsh(spec.a(t, X))[:, 0]
        k = int(np.argmin(ev))
        if ev[k] < lam:
            lam, lam_arg = float(ev[k]), X[k]
    ok = lam > 0 and (spec.delta is None or lam >= spec.delta * (1 - 1e-12))
    report.entries.append(AssumptionEntry("K1_ellipticity", lam, ok, None if ok else _point(lam_arg), {"declared_delta": spec.delta}))

    # potential lower bound
    gap, gap_arg = math.inf, None
    for t in _times(spec):
        g = spec.c(t, X) - spec.c0
        k = int(np.argmin(g))
        if g[k] < gap:
            gap, gap_arg = float(g[k]), X[k]
    ok = gap >= -1e-12
    report.entries.append(
        AssumptionEntry("c_lower_bound", gap, ok, None if ok else _point(gap_arg), {"c0": spec.c0, "c0_positive": spec.c0 > 0})
    )

    if profile is Profile.STRICT:
        _strict_entries(spec, report, X, Xh, r_half, r_full)
    return report


def _strict_entries(spec, report, X, Xh, r_half, r_full):
    for which in ("b", "sigma", "c"):
        # [estimate, half-box estimate, argmax, estimate with a 4x finer step, time of argmax]
        per_order = {o: [0.0, 0.0, None, 0.0, spec.t0] for o in (1, 2, 3)}
        for t in _times(spec):
            full = _derivative_tensors(spec, t, X, which)
            fine = _derivative_tensors(spec, t, X, which, HIGHER_ORDER_STEP / 4)
            half = _derivative_tensors(spec, t, Xh, which)
            for order in (1, 2, 3):
                k = int(np.argmax(full[order - 1]))
                if full[order - 1][k] >= per_order[order][0]:
                    per_order[order][0] = float(full[order - 1][k])
                    per_order[order][2] = X[k]
                    per_order[order][4] = t
                per_order[order][1] = max(per_order[order][1], float(half[order - 1].max()))
                per_order[order][3] = max(per_order[order][3], float(fine[order - 1].max()))
        for order in (1, 2, 3):
            est, est_half, arg, est_fine, t_arg = per_order[order]
            if arg is not None:
                scan = _refinement_scan(arg, HIGHER_ORDER_STEP)
                est_fine = max(est_fine, float(_derivative_tensors(spec, t_arg, scan, which, HIGHER_ORDER_STEP / 4)[order - 1].max()))
            expo = _growth_exponent(est_half, est, r_half, r_full)
            # a kink shows up as an estimate that grows when the step shrinks
            refine = est_fine / est if est > 1e-8 else 1.0
            ok = math.isfinite(est) and expo <= LIPSCHITZ_GROWTH_SLACK and refine <= 2.0
            report.entries.append(
                AssumptionEntry(
                    f"D{order}_{which}_bounded",
                    est,
                    ok,
                    None if ok else _point(arg),
                    {"half_box": est_half, "growth_exponent": expo, "step_refinement_ratio": refine},
                )
            )

    # diffusion band C1 (1+|x|)^{1/2} <= sigma <= C2 (1+|x|), on singular values
    c1, c2, arg = math.inf, 0.0, None
    r = np.linalg.norm(X, axis=1)
    for t in _times(spec):
        sv = np.linalg.svd(spec.sigma(t, X), compute_uv=False)
        low = sv[:, -1] / np.sqrt(1.0 + r) if spec.m >= spec.d else np.zeros(X.shape[0])
        high = sv[:, 0] / (1.0 + r)
        k = int(np.argmin(low))
        if low[k] < c1:
            c1, arg = float(low[k]), X[k]
        c2 = max(c2, float(high.max()))
    ok = c1 > 0 and math.isfinite(c2)
    report.entries.append(AssumptionEntry("diffusion_band", c1, ok, None if ok else _point(arg), {"C1": c1, "C2": c2}))

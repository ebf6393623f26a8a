"""Desk-scale checks of growth, maximum-principle, smoothing, Schauder and weight-transform bounds."""

from __future__ import annotations

import enum
import json
import math
from importlib import resources

import numpy as np

from .. import fd, fk, spaces
from ..fd import localized_cross_check  # noqa: F401  (part of the harness surface)
from ..grid import Box, Field
from ..problem.families import build_family
from ..problem.spec import ProblemSpec
from ..report import BoundCheck, GrowthReport
from ..rng import derive_seed
from ..weights import weight_values

GROWTH_SLACK = 0.3  # MC noise plus the curvature of log(1 + r) fits
SMOOTHING_SLACK = 0.15  # finite ladder, top-order fit
STABILITY_FACTOR = 2.0  # calibrated constants are re-asserted within this factor
ROUNDING = 1e-10
MAX_RADIUS = 100.0


class Mode(str, enum.Enum):
    INTERIOR = "INTERIOR"
    OPTIMAL = "OPTIMAL"


# ---------------------------------------------------------------- calibration data


def load_calibration(path=None):
    if path is not None:
        with open(path) as fh:
            return json.load(fh)
    try:
        text = resources.files("kolmogorov_fk.harness").joinpath("data/calibration.json").read_text()
    except FileNotFoundError:
        return {}
    return json.loads(text)


# ---------------------------------------------------------------- fields


def localized_field(spec: ProblemSpec, box: Box, n_paths=20_000, n_steps=20, seed=0, theta=0.5, n_ladder=11, antithetic=True):
    """FD solution on ``box`` with lateral data from Monte Carlo and terminal ``h``.

    ``Field.stderr`` carries the boundary noise propagated into the interior.
    """
    if abs(box.t2 - spec.T) > 1e-12:
        raise ValueError("the box must end at the horizon T")
    vals, errs = fd.boundary_from_mc(spec, box, n_paths, n_steps, seed, antithetic, n_ladder)
    fld = fd.solve_dirichlet(spec, box, None, vals, theta)
    fld.stderr = fd.propagated_stderr(spec, box, errs, theta)
    fld.meta.update({"n_paths": n_paths, "n_steps": n_steps, "seed": seed, "n_ladder": n_ladder, "antithetic": antithetic})
    return fld


def _sampled_sup(spec, box, n=4001):
    X = box.points()
    wide = np.concatenate([X, 10.0 * X])
    if spec.d == 1:
        r = max(abs(box.lower[0]), abs(box.upper[0]))
        wide = np.concatenate([wide, np.linspace(-100 * r, 100 * r, n)[:, None]])
    return float(np.abs(spec.h(wide)).max())


# ---------------------------------------------------------------- maximum principle


def check_max_principle(spec: ProblemSpec, fld: Field, h_sup=None, c0=None, allowance=ROUNDING) -> BoundCheck:
    """Slice-wise ``max |u(t_k)| <= exp(-c0 (T - t_k)) sup|h|`` (+ 3 stderr when the field has one)."""
    if not spec.source_is_zero:
        raise ValueError("the maximum-principle check needs f = 0")
    c0 = spec.c0 if c0 is None else float(c0)
    if h_sup is None:
        h_sup = _sampled_sup(spec, fld.box)
    times = fld.box.times()
    n = len(times)
    lhs = np.abs(fld.values.reshape(n, -1)).max(axis=1)
    bound = np.exp(-c0 * (spec.T - times)) * h_sup
    noise = np.zeros(n) if fld.stderr is None else 3.0 * fld.stderr.reshape(n, -1).max(axis=1)
    rhs = bound + noise
    worst = int(np.argmin(rhs - lhs))
    return BoundCheck(
        tag="max_principle",
        lhs=float(lhs[worst]),
        rhs=float(rhs[worst]),
        tolerance=allowance,
        inputs={"problem": spec.describe(), "box": fld.box.describe(), "c0": c0, "h_sup": h_sup, "field": dict(fld.meta)},
        detail={
            "times": times.tolist(),
            "lhs": lhs.tolist(),
            "bound": bound.tolist(),
            "noise": noise.tolist(),
            "worst_slice": worst,
            "max_gap": float(np.abs(lhs - bound).max()),
        },
    )


# ---------------------------------------------------------------- growth


def sphere_points(d, r, n_dirs=8, seed=0):
    if d == 1:
        return np.array([[-r], [r]])
    eye = np.eye(d)
    dirs = [eye, -eye]
    if n_dirs:
        g = np.random.default_rng(seed).standard_normal((n_dirs, d))
        dirs.append(g / np.linalg.norm(g, axis=1, keepdims=True))
    return r * np.concatenate(dirs)


def check_growth(
    spec: ProblemSpec,
    radii,
    t=None,
    order=0,
    n_paths=20_000,
    n_steps=50,
    seed=0,
    n_dirs=8,
    antithetic=True,
    slack=GROWTH_SLACK,
    max_radius=MAX_RADIUS,
) -> GrowthReport:
    """Fit ``log sup_{|x|=r} |D^order u(t, x)|`` against ``log(1 + r)``.

    The exponent is ``2q`` for values and ``2q(1 + order)`` for gradients; the
    sharper ``2q`` is recorded for gradients too.
    """
    radii = [float(r) for r in radii]
    if len(radii) < 3 or any(b <= a for a, b in zip(radii, radii[1:])):
        raise ValueError("need at least three strictly increasing radii")
    if radii[0] <= 0 or radii[-1] / radii[0] < 4:
        raise ValueError("radii must be positive and span at least a factor of 4")
    if radii[-1] > max_radius:
        raise ValueError(f"radius {radii[-1]} exceeds the overflow-safe region (<= {max_radius})")
    if order not in (0, 1):
        raise ValueError("order must be 0 or 1")
    t = spec.t0 if t is None else float(t)
    sups = []
    for i, r in enumerate(radii):
        best = 0.0
        for j, x in enumerate(sphere_points(spec.d, r, n_dirs, derive_seed(seed, "directions"))):
            s = derive_seed(seed, i, j)
            if order == 0:
                est = fk.estimate_value(spec, t, x, n_paths, n_steps, s, antithetic)
                val = abs(est.mean)
            else:
                est = fk.estimate_gradient(spec, t, x, n_paths, n_steps, s, antithetic)
                val = float(np.linalg.norm(est.mean))
            best = max(best, val)
        sups.append(best)
    sups_arr = np.array(sups)
    if np.all(sups_arr > 0):
        slope = float(np.polyfit(np.log1p(radii), np.log(sups_arr), 1)[0])
        if np.all(sups_arr == sups_arr[0]):
            slope = 0.0
    else:
        slope = math.nan
    q = spec.q
    exponent = 2.0 * q * (1 + order)
    return GrowthReport(
        tag="growth_value" if order == 0 else "growth_gradient",
        radii=radii,
        sups=sups,
        slope=slope,
        exponent=exponent,
        slack=slack,
        sharp_exponent=2.0 * q if order else None,
        order=order,
        inputs={"problem": spec.describe(), "t": t, "n_paths": n_paths, "n_steps": n_steps, "seed": seed, "n_dirs": n_dirs, "antithetic": antithetic},
        detail={"abscissa": "log(1+r)"},
    )


# ---------------------------------------------------------------- smoothing


def _top_order_sup(values, box, order, margin):
    best = np.zeros(values.shape[0])
    for alpha in fd.multi_indices(box.d, order):
        D = fd.spatial_derivative(values, box.spacing, alpha, margin)
        best = np.maximum(best, np.abs(D.reshape(values.shape[0], -1)).max(axis=1))
    return best


def check_smoothing(
    spec: ProblemSpec,
    box: Box,
    taus=(0.4, 0.2, 0.1, 0.05),
    p2=1,
    n_paths=20_000,
    n_steps=20,
    seed=0,
    theta=1.0,
    steps_per_tau=50,
    inner=0.5,
    slack=SMOOTHING_SLACK,
) -> BoundCheck:
    """Blow-up exponent of ``sup |D^{p2} u(T - tau)|`` as ``tau -> 0`` for bounded ``h``.

    Only the top-order term of the ``BC^{p2}`` norm is fitted: lower-order terms
    stay bounded and would flatten the fit.  ``box`` supplies the spatial grid;
    its times are replaced by ``[T - max(taus), T]``.
    """
    if not spec.source_is_zero:
        raise ValueError("the smoothing check needs f = 0")
    if spec.terminal.growth != "bounded":
        raise ValueError("the smoothing check needs a bounded terminal datum")
    if p2 not in (1, 2):
        raise ValueError("p2 must be 1 or 2")
    taus = np.sort(np.asarray(taus, dtype=np.float64))[::-1]
    dt = taus[-1] / steps_per_tau
    n_t = int(round(taus[0] / dt))
    grid = box.with_times(spec.T - taus[0], spec.T, n_t)
    X = grid.points()
    a_min = float(np.linalg.eigvalsh(spec.a(spec.T, X))[:, 0].min())
    width = math.sqrt(2.0 * a_min * taus[-1])
    if width < 2.0 * max(grid.spacing):
        raise ValueError(f"ladder too close to T: smoothing width {width:.3g} below two mesh widths {2 * max(grid.spacing):.3g}")
    fld = localized_field(spec, grid, n_paths, n_steps, seed, theta)
    times = grid.times()
    idx = [int(round((spec.T - tau - grid.t1) / grid.dt)) for tau in taus]
    margin = max(1, int(round((1.0 - inner) * min(grid.counts) / 2)))
    sups = _top_order_sup(fld.values[idx], grid, p2, margin)
    slope = float(np.polyfit(np.log(taus), np.log(sups), 1)[0])
    exponent = -slope
    return BoundCheck(
        tag=f"smoothing_p{p2}",
        lhs=exponent,
        rhs=p2 / 2.0 + slack,
        tolerance=0.0,
        inputs={"problem": spec.describe(), "box": grid.describe(), "n_paths": n_paths, "n_steps": n_steps, "seed": seed, "theta": theta},
        detail={"taus": taus.tolist(), "times": [float(times[k]) for k in idx], "sups": sups.tolist(), "theory": p2 / 2.0, "slack": slack},
    )


# ---------------------------------------------------------------- Bernstein functional


def cutoff(X, center, radius):
    """C^3 radial bump: 1 on the ball of radius R/2, 0 outside radius R."""
    r = np.linalg.norm(np.asarray(X) - np.asarray(center), axis=1)
    z = np.clip((r - radius / 2.0) / (radius / 2.0), 0.0, 1.0)
    step = z**4 * (35.0 - 84.0 * z + 70.0 * z**2 - 20.0 * z**3)
    return 1.0 - step


def _multiplicity(alpha):
    return math.factorial(sum(alpha)) // math.prod(math.factorial(k) for k in alpha)


def bernstein_values(fld: Field, a, T, radius=None):
    """``v_R`` on the nodes at least two cells from the edge; returns (inner box, values)."""
    box = fld.box
    if any(n < 5 for n in box.counts):
        raise ValueError("third derivatives need at least 5 nodes per axis")
    margin = 2
    inner = box.shrink(margin)
    X = inner.points()
    center = [(lo + hi) / 2 for lo, hi in zip(box.lower, box.upper)]
    if radius is None:
        radius = min((hi - lo) / 2 for lo, hi in zip(inner.lower, inner.upper))
    eta = cutoff(X, center, radius)
    U = fld.values
    n = U.shape[0]
    tau = (T - box.times())[:, None]
    v = spatial_derivative_sq(U, box, (0,) * box.d, margin).reshape(n, -1)
    for order in (1, 2, 3):
        acc = np.zeros_like(v)
        for alpha in fd.multi_indices(box.d, order):
            acc += _multiplicity(alpha) * spatial_derivative_sq(U, box, alpha, margin).reshape(n, -1)
        v = v + (a * tau) ** order * eta[None, :] ** (2 * order) * acc
    return inner, v.reshape(inner.shape)


def spatial_derivative_sq(U, box, alpha, margin):
    return fd.spatial_derivative(U, box.spacing, alpha, margin) ** 2


def bernstein_functional(fld: Field, a=0.01, T=None, h_sup=None, bound=None, radius=None, a_ladder=(1.0, 0.5, 0.25, 0.0)):
    """``v_R = u^2 + sum_k (a tau)^k eta^(2k) sum |D^k u|^2`` (k = 1, 2, 3) and the check
    ``sup_x v_R(t) <= bound * sup|h|^2`` at every slice.

    ``bound`` defaults to the stability factor times the calibrated constant.  The
    functional must also not increase as ``a`` shrinks along ``a_ladder``.
    """
    if T is None:
        T = fld.box.t2
    if h_sup is None:
        h_sup = float(np.abs(fld.values[-1]).max())
    calibrated = load_calibration().get("bernstein", {}).get("constant")
    if bound is None:
        bound = STABILITY_FACTOR * calibrated if calibrated is not None else math.nan
    inner, v = bernstein_values(fld, a, T, radius)
    n = v.shape[0]
    per_slice = v.reshape(n, -1).max(axis=1)
    scale = h_sup**2
    ratio = per_slice / scale if scale > 0 else np.where(per_slice > 0, math.inf, 0.0)
    ladder = [float(np.max(bernstein_values(fld, a * s, T, radius)[1])) for s in a_ladder]
    monotone = all(y <= x * (1 + 1e-12) + 1e-300 for x, y in zip(ladder, ladder[1:]))
    lhs = float(ratio.max()) if monotone else math.nan
    check = BoundCheck(
        tag="bernstein",
        lhs=lhs,
        rhs=float(bound),
        tolerance=ROUNDING,
        inputs={"box": fld.box.describe(), "a": a, "T": T, "h_sup": h_sup, "field": dict(fld.meta)},
        detail={"ratio_per_slice": ratio.tolist(), "a_ladder": [a * s for s in a_ladder], "sup_v_ladder": ladder, "monotone_in_a": monotone, "calibrated": calibrated},
    )
    return Field(inner, v, "bernstein"), check


# ---------------------------------------------------------------- Schauder ratios


def _slice_norm(values, box, q, p, beta):
    X, derivs = spaces.grid_derivatives(values, box, p)
    return spaces.weighted_norm(X, derivs, q, p, beta, spaces.Variant.STANDARD).value


def schauder_ratio(spec: ProblemSpec, fld: Field, mode=Mode.INTERIOR, beta=0.5, q=None, inner=0.5, n_slices=4):
    """Solution-side over data-side weighted norm on the central part of the box.

    INTERIOR: ``max_t (|u(t)|_{BC_P} + (T-t)^{1+beta/2} |u(t)|_{H_P^{2+beta}})`` over
    ``|h|_{BC_P} + sup_t [f(t)]_{H_P^beta}``.  OPTIMAL: ``sup_t |u(t)|_{H_P^{2+beta}}`` over
    ``|h|_{H_P^{2+beta}} + sup_t |f(t)|_{H_P^beta}``.  Returns ``(ratio, detail)``.
    """
    mode = Mode(mode)
    q = spec.q if q is None else int(q)
    box = fld.box
    margin = max(1, int(round((1.0 - inner) * min(box.counts) / 2)))
    part = fld.restrict(margin)
    pbox = part.box
    times = pbox.times()
    picks = np.unique(np.linspace(0, pbox.n_t - 1, n_slices).round().astype(int))
    X = pbox.points()
    H = spec.h(X).reshape(pbox.counts)
    f_norm = 0.0
    if not spec.source_is_zero:
        for t in times:
            fv = spec.f(float(t), X)
            f_norm = max(f_norm, spaces.weighted_norm(X, {(0,) * spec.d: fv}, q, 0, beta).value)
    sol = []
    for k in picks:
        tau = spec.T - float(times[k])
        top = _slice_norm(part.values[k], pbox, q, 2, beta)
        if mode is Mode.INTERIOR:
            low = _slice_norm(part.values[k], pbox, q, 0, None)
            sol.append(low + tau ** (1.0 + beta / 2.0) * top)
        else:
            sol.append(top)
    if mode is Mode.INTERIOR:
        h_norm = _slice_norm(H, pbox, q, 0, None)
    else:
        h_norm = _slice_norm(H, pbox, q, 2, beta)
        sol.append(_slice_norm(part.values[-1], pbox, q, 2, beta))
    lhs = max(sol)
    rhs = h_norm + f_norm
    detail = {"solution_side": float(lhs), "data_side": float(rhs), "h_norm": h_norm, "f_norm": f_norm, "slices": picks.tolist(), "inner_box": pbox.describe()}
    if lhs == 0.0 and rhs == 0.0:
        return math.nan, detail
    return float(lhs / rhs), detail


def check_schauder_ratio(
    spec: ProblemSpec,
    box: Box,
    mode=Mode.INTERIOR,
    key=None,
    beta=0.5,
    n_paths=20_000,
    n_steps=20,
    seed=0,
    constant=None,
    fld=None,
) -> BoundCheck:
    """Ratio stability: ``max(r / C, C / r) <= 2`` against the calibrated constant ``C``."""
    mode = Mode(mode)
    if fld is None:
        fld = localized_field(spec, box, n_paths, n_steps, seed)
    ratio, detail = schauder_ratio(spec, fld, mode, beta)
    key = key or spec.name
    if constant is None:
        constant = load_calibration().get("schauder", {}).get(mode.value, {}).get(key)
    detail.update({"ratio": ratio, "constant": constant, "key": key})
    inputs = {"problem": spec.describe(), "box": box.describe(), "mode": mode.value, "beta": beta, "n_paths": n_paths, "n_steps": n_steps, "seed": seed}
    if math.isnan(ratio):
        detail["vacuous"] = True
        return BoundCheck(f"schauder_{mode.value.lower()}", 0.0, STABILITY_FACTOR, 0.0, inputs, detail)
    lhs = max(ratio / constant, constant / ratio) if constant else math.nan
    return BoundCheck(f"schauder_{mode.value.lower()}", lhs, STABILITY_FACTOR, 0.0, inputs, detail)


# ---------------------------------------------------------------- weight transform


def transform_cross_check(
    spec: ProblemSpec,
    q: int,
    box: Box,
    n_paths=100_000,
    n_steps=20,
    seed=0,
    multiply_q=None,
    n_check=5,
    allowance=5e-3,
    theta=0.5,
    antithetic=True,
    n_ladder=11,
) -> BoundCheck:
    """FD solve of the weight-transformed problem, times ``P``, against MC of the original.

    ``multiply_q`` (default ``q``) is the weight exponent used to undo the transform;
    a different value is the mismatched-q negative control.
    """
    mq = q if multiply_q is None else int(multiply_q)
    tr = spaces.transform_to_bounded(spec, q)
    bvals, berrs = fd.boundary_from_mc(spec, box, n_paths, n_steps, seed, antithetic, n_ladder, divide_by_weight=q)
    X = box.points()
    fld = fd.solve_dirichlet(tr, box, tr.h(X), bvals, theta)
    fd_err = fd.propagated_stderr(tr, box, berrs, theta)
    interior = np.flatnonzero(~box.boundary_mask().reshape(-1))
    pick = interior[np.unique(np.linspace(0, len(interior) - 1, n_check).round().astype(int))]
    mc, mc_err = fk.estimate_nodes(spec, np.full(len(pick), box.t1), X[pick], 20_000_000 + pick, n_paths, n_steps, seed + 1, antithetic)
    P = weight_values(mq, X[pick])
    u_fd = fld.values[0].reshape(-1)[pick] * P
    e_fd = fd_err[0].reshape(-1)[pick] * P
    disc = np.abs(u_fd - mc)
    allowed = 3.0 * np.sqrt(mc_err**2 + e_fd**2) + allowance
    worst = int(np.argmax(disc - allowed))
    return BoundCheck(
        tag="weight_transform",
        lhs=float(disc[worst]),
        rhs=float(allowed[worst]),
        tolerance=ROUNDING,
        inputs={"problem": spec.describe(), "q": q, "multiply_q": mq, "box": box.describe(), "n_paths": n_paths, "n_steps": n_steps, "seed": seed, "antithetic": antithetic},
        detail={"points": X[pick].tolist(), "fd_times_P": u_fd.tolist(), "mc": mc.tolist(), "mc_stderr": mc_err.tolist(), "fd_stderr": e_fd.tolist(), "transformed_c0": tr.c0},
    )


# ---------------------------------------------------------------- calibration sweep


SCHAUDER_SWEEP = (
    ("heat-a1-c1", dict(a=1.0, c=1.0, terminal="square")),
    ("heat-a0.5-c1", dict(a=0.5, c=1.0, terminal="square")),
    ("heat-a1-c0.5-weight", dict(a=1.0, c=0.5, terminal="weight")),
    ("heat-a0.5-c2-T0.5", dict(a=0.5, c=2.0, terminal="square", T=0.5)),
    ("heat-a2-c1-weight-T0.5", dict(a=2.0, c=1.0, terminal="weight", T=0.5)),
)
SCHAUDER_BOX = dict(lower=(-4.0,), upper=(4.0,), counts=(81,), n_t=50)
BERNSTEIN_PROBLEM = dict(a=1.0, c=1.0, terminal="tanh", scale=1.0)
BERNSTEIN_BOX = dict(lower=(-6.0,), upper=(6.0,), counts=(121,), n_t=100)


def sweep_member(name):
    params = dict(SCHAUDER_SWEEP)[name]
    return build_family("heat", name=name, **params)


def sweep_box(spec):
    return Box(SCHAUDER_BOX["lower"], SCHAUDER_BOX["upper"], SCHAUDER_BOX["counts"], spec.t0, spec.T, SCHAUDER_BOX["n_t"])


def bernstein_setup(seed=0, n_paths=20_000):
    spec = build_family("heat", name="bernstein-tanh", **BERNSTEIN_PROBLEM)
    box = Box(BERNSTEIN_BOX["lower"], BERNSTEIN_BOX["upper"], BERNSTEIN_BOX["counts"], spec.t0, spec.T, BERNSTEIN_BOX["n_t"])
    return spec, localized_field(spec, box, n_paths, 20, seed)


def calibrate(seed=0, n_paths=20_000, path=None):
    """Recompute the frozen constants; writes JSON to ``path`` when given."""
    out = {"schauder": {m.value: {} for m in Mode}, "seed": seed, "n_paths": n_paths}
    for name, _ in SCHAUDER_SWEEP:
        spec = sweep_member(name)
        fld = localized_field(spec, sweep_box(spec), n_paths, 20, derive_seed(seed, name))
        for m in Mode:
            out["schauder"][m.value][name] = schauder_ratio(spec, fld, m)[0]
    spec, fld = bernstein_setup(derive_seed(seed, "bernstein"), n_paths)
    _, v = bernstein_values(fld, 0.01, spec.T)
    out["bernstein"] = {"constant": float(v.reshape(v.shape[0], -1).max() / 1.0), "a": 0.01, "h_sup": 1.0}
    if path is not None:
        with open(path, "w") as fh:
            json.dump(out, fh, indent=2, sort_keys=True)
            fh.write("\n")
    return out

"""Config-driven verification suite.

A suite file is TOML::

    [suite]
    name = "default"
    seed = 1234

    [[check]]
    name = "max-principle-constant"
    kind = "max_principle"
    problem = { family = "constant", K = 3.0, c = 0.7 }
    box = { lower = [-2.0], upper = [2.0], counts = [21], n_t = 20 }

Checks flagged ``negative_control = true`` run only when controls are enabled;
they are expected to fail.
"""

from __future__ import annotations

import json
import math
import os
import sys
import time
import traceback
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from importlib import resources
from typing import List

import numpy as np

from .. import fd, fk, sde, spaces
from ..grid import Box
from ..problem.families import build_family
from ..problem.io import load_problem, spec_from_dict
from ..problem.spec import corrupt_potential, shift_zeroth_order
from ..report import SCHEMA_VERSION, BoundCheck
from ..rng import derive_seed
from . import checks, oracles

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib


class SuiteConfigError(ValueError):
    pass


# ---------------------------------------------------------------- config helpers


def _problem(cfg, base_dir=None):
    if "problem_file" in cfg:
        path = cfg["problem_file"]
        if base_dir and not os.path.isabs(path):
            path = os.path.join(base_dir, path)
        return load_problem(path)
    prob = cfg.get("problem")
    if prob is None:
        raise SuiteConfigError("check needs a 'problem' table or 'problem_file'")
    prob = dict(prob)
    if "family" in prob:
        fam = prob.pop("family")
        return build_family(fam, **prob)
    return spec_from_dict(prob)


def _box(cfg, spec):
    b = cfg.get("box")
    if b is None:
        raise SuiteConfigError("check needs a 'box' table")
    return Box(tuple(b["lower"]), tuple(b["upper"]), tuple(b["counts"]), float(b.get("t1", spec.t0)), float(b.get("t2", spec.T)), int(b["n_t"]))


def _heat_params(spec):
    fam = spec.family or {}
    if fam.get("name") != "heat":
        raise SuiteConfigError("closed-form checks need a heat-family problem")
    p = fam["params"]
    return float(p["a"]), float(p["c"]), float(p["T"])


def _violation(value, lo=None, hi=None):
    """Amount by which ``value`` leaves ``[lo, hi]`` (<= 0 inside)."""
    out = -math.inf
    if lo is not None:
        out = max(out, lo - value)
    if hi is not None:
        out = max(out, value - hi)
    return out if math.isfinite(value) else math.nan


# ---------------------------------------------------------------- check kinds

KINDS = {}


def kind(name):
    def deco(fn):
        KINDS[name] = fn
        return fn

    return deco


@kind("oracle_value")
def _oracle_value(cfg, seed, base_dir):
    spec = _problem(cfg, base_dir)
    a, c, T = _heat_params(spec)
    t = float(cfg.get("t", spec.t0))
    pts = np.asarray(cfg["points"], dtype=float).reshape(-1, spec.d)
    n_paths, n_steps = int(cfg.get("n_paths", 100_000)), int(cfg.get("n_steps", 200))
    diffs, errs, means = [], [], []
    for i, x in enumerate(pts):
        est = fk.estimate_value(spec, t, x, n_paths, n_steps, derive_seed(seed, i), bool(cfg.get("antithetic", False)))
        exact = float(oracles.heat_square(t, x[None, :], T, a, c)[0])
        diffs.append(abs(est.mean - exact))
        errs.append(est.stderr)
        means.append(est.mean)
    z = np.array(diffs) / np.array(errs)
    k = int(np.argmax(z))
    return BoundCheck("fk_value_oracle", diffs[k], 3.0 * errs[k], 0.0,
                      {"problem": spec.describe(), "t": t, "n_paths": n_paths, "n_steps": n_steps, "seed": seed},
                      {"points": pts.tolist(), "means": means, "stderr": errs, "abs_error": diffs})


@kind("fd_oracle")
def _fd_oracle(cfg, seed, base_dir):
    spec = _problem(cfg, base_dir)
    a, c, T = _heat_params(spec)
    box = _box(cfg, spec)

    def exact(t, X):
        return oracles.heat_square(t, X, T, a, c)

    fld = fd.solve_dirichlet(spec, box, None, exact, float(cfg.get("theta", 0.5)))
    ref = np.stack([exact(t, box.points()).reshape(box.counts) for t in box.times()])
    err = float(np.abs(fld.interior() - ref[(slice(None),) + box.interior_slices()]).max())
    return BoundCheck("fd_oracle", err, float(cfg.get("tolerance", 2e-3)), 0.0, {"problem": spec.describe(), "box": box.describe()}, {})


@kind("oracle_gradient")
def _oracle_gradient(cfg, seed, base_dir):
    spec = _problem(cfg, base_dir)
    a, c, T = _heat_params(spec)
    t = float(cfg.get("t", spec.t0))
    pts = np.asarray(cfg["points"], dtype=float).reshape(-1, spec.d)
    n_paths, n_steps = int(cfg.get("n_paths", 20_000)), int(cfg.get("n_steps", 100))
    bump = float(cfg.get("bump", 1e-3))
    worst = (-math.inf, 0.0, 0.0)
    rows = []
    for i, x in enumerate(pts):
        s = derive_seed(seed, i)
        g = fk.estimate_gradient(spec, t, x, n_paths, n_steps, s)
        exact = oracles.heat_square_gradient(t, x[None, :], T, a, c)[0]
        for k in range(spec.d):
            e = np.zeros(spec.d)
            e[k] = bump
            up = fk.payoff_samples(spec, t, x + e, n_paths, n_steps, s)
            dn = fk.payoff_samples(spec, t, x - e, n_paths, n_steps, s)
            fdiff = (up - dn) / (2 * bump)
            fd_mean, fd_err = fdiff.mean(), fdiff.std(ddof=1) / math.sqrt(n_paths)
            pairs = [
                (abs(g.mean[k] - exact[k]), 3.0 * g.stderr[k]),
                (abs(g.mean[k] - fd_mean), 3.0 * math.hypot(g.stderr[k], fd_err) + 1e-4),
            ]
            for lhs, rhs in pairs:
                if lhs - rhs > worst[0]:
                    worst = (lhs - rhs, lhs, rhs)
            rows.append({"x": x.tolist(), "k": k, "mc": float(g.mean[k]), "stderr": float(g.stderr[k]), "exact": float(exact[k]), "bump": float(fd_mean)})
    return BoundCheck("fk_gradient", worst[1], worst[2], 0.0, {"problem": spec.describe(), "n_paths": n_paths, "n_steps": n_steps, "seed": seed}, {"rows": rows})


@kind("max_principle")
def _max_principle(cfg, seed, base_dir):
    spec = _problem(cfg, base_dir)
    box = _box(cfg, spec)
    ladder = cfg.get("n_ladder", 11)
    fld = checks.localized_field(spec, box, int(cfg.get("n_paths", 20_000)), int(cfg.get("n_steps", 20)), seed,
                                 float(cfg.get("theta", 0.5)), None if ladder == "all" else int(ladder))
    c0 = spec.c0 + float(cfg.get("c0_offset", 0.0))
    return checks.check_max_principle(spec, fld, cfg.get("h_sup"), c0)


@kind("growth")
def _growth(cfg, seed, base_dir):
    spec = _problem(cfg, base_dir)
    rep = checks.check_growth(spec, cfg["radii"], cfg.get("t"), int(cfg.get("order", 0)), int(cfg.get("n_paths", 20_000)),
                              int(cfg.get("n_steps", 50)), seed, int(cfg.get("n_dirs", 8)))
    if "min_slope" in cfg:
        rep.lower = float(cfg["min_slope"])
    if "max_slope" in cfg:
        rep.slack = float(cfg["max_slope"]) - rep.exponent
    return rep


@kind("smoothing")
def _smoothing(cfg, seed, base_dir):
    spec = _problem(cfg, base_dir)
    box = _box(cfg, spec)
    chk = checks.check_smoothing(spec, box, tuple(cfg.get("taus", (0.4, 0.2, 0.1, 0.05))), int(cfg.get("p2", 1)),
                                 int(cfg.get("n_paths", 20_000)), int(cfg.get("n_steps", 20)), seed)
    if "exponent_range" in cfg:
        lo, hi = cfg["exponent_range"]
        chk.detail["exponent"] = chk.lhs
        chk.detail["range"] = [lo, hi]
        chk.lhs, chk.rhs = _violation(chk.detail["exponent"], lo, hi), 0.0
    return chk


@kind("schauder")
def _schauder(cfg, seed, base_dir):
    out = []
    members = cfg.get("members") or [m for m, _ in checks.SCHAUDER_SWEEP]
    modes = cfg.get("modes", ["INTERIOR", "OPTIMAL"])
    n_paths = int(cfg.get("n_paths", 20_000))
    for name in members:
        spec = checks.sweep_member(name)
        box = checks.sweep_box(spec)
        fld = checks.localized_field(spec, box, n_paths, 20, derive_seed(seed, name))
        for m in modes:
            rec = checks.check_schauder_ratio(spec, box, m, name, n_paths=n_paths, seed=derive_seed(seed, name), fld=fld)
            rec.name = f"{cfg['name']}/{name}/{m}"
            out.append(rec)
    if cfg.get("scaling", True):
        name = members[0]
        spec = checks.sweep_member(name)
        from ..problem.spec import scale_data

        box = checks.sweep_box(spec)
        s = derive_seed(seed, "scaling")
        r1 = checks.schauder_ratio(spec, checks.localized_field(spec, box, n_paths, 20, s))[0]
        big = scale_data(spec, 10.0)
        r2 = checks.schauder_ratio(big, checks.localized_field(big, box, n_paths, 20, s))[0]
        out.append(BoundCheck("schauder_scaling", abs(r2 / r1 - 1.0), 1e-10, 0.0, {"member": name, "lambda": 10.0}, {"ratio": r1, "scaled_ratio": r2},
                              name=f"{cfg['name']}/scaling"))
    return out


@kind("bernstein")
def _bernstein(cfg, seed, base_dir):
    spec, fld = checks.bernstein_setup(seed, int(cfg.get("n_paths", 20_000)))
    _, chk = checks.bernstein_functional(fld, float(cfg.get("a", 0.01)), spec.T, h_sup=1.0)
    return chk


@kind("transform")
def _transform(cfg, seed, base_dir):
    spec = _problem(cfg, base_dir)
    box = _box(cfg, spec)
    return checks.transform_cross_check(spec, int(cfg.get("q", 1)), box, int(cfg.get("n_paths", 100_000)), int(cfg.get("n_steps", 20)), seed,
                                        cfg.get("multiply_q"), allowance=float(cfg.get("allowance", 5e-3)))


@kind("localization")
def _localization(cfg, seed, base_dir):
    spec = _problem(cfg, base_dir)
    box = _box(cfg, spec)
    corrupt = float(cfg.get("corrupt_potential", 0.0))
    fd_spec = corrupt_potential(spec, corrupt) if corrupt else None
    return fd.localized_cross_check(spec, box, int(cfg.get("n_paths", 100_000)), int(cfg.get("n_steps", 20)), seed,
                                    allowance=float(cfg.get("allowance", 1e-3)), fd_spec=fd_spec)


@kind("strong_order")
def _strong_order(cfg, seed, base_dir):
    spec = _problem(cfg, base_dir)
    x = np.asarray(cfg.get("x", [1.0] * spec.d), dtype=float)
    rep = sde.strong_error(spec, spec.t0, x, cfg.get("ladder", [8, 16, 32, 64, 128, 256, 512, 1024]), int(cfg.get("n_paths", 2000)), seed)
    lo, hi = cfg.get("min_slope"), cfg.get("max_slope")
    return BoundCheck("strong_order", _violation(rep.slope, lo, hi), 0.0, 0.0, {"problem": spec.describe(), "seed": seed}, rep.to_dict())


@kind("variation_bump")
def _variation_bump(cfg, seed, base_dir):
    spec = _problem(cfg, base_dir)
    x = np.asarray(cfg.get("x", [1.0] * spec.d), dtype=float)
    n_paths, n_steps, bump = int(cfg.get("n_paths", 1000)), int(cfg.get("n_steps", 50)), float(cfg.get("bump", 1e-6))
    base = sde.simulate_with_variation(spec, spec.t0, x, n_paths, n_steps, seed)
    worst = 0.0
    for k in range(spec.d):
        e = np.zeros(spec.d)
        e[k] = bump
        up = sde.simulate_paths(spec, spec.t0, x + e, n_paths, n_steps, seed).states[:, -1]
        dn = sde.simulate_paths(spec, spec.t0, x - e, n_paths, n_steps, seed).states[:, -1]
        fdj = (up - dn) / (2 * bump)
        J = base.variation[:, -1, :, k]
        worst = max(worst, float(np.abs(J - fdj).max() / np.abs(J).max()))
    return BoundCheck("first_variation", worst, float(cfg.get("tolerance", 1e-3)), 0.0, {"problem": spec.describe(), "seed": seed, "bump": bump}, {})


@kind("reproducibility")
def _reproducibility(cfg, seed, base_dir):
    spec = _problem(cfg, base_dir)
    x = np.asarray(cfg.get("x", [0.5] * spec.d), dtype=float)
    n_paths, n_steps = int(cfg.get("n_paths", 5000)), int(cfg.get("n_steps", 20))
    ref = None
    mismatches = 0
    for w in cfg.get("workers", [1, 4, 8]):
        b = sde.simulate_paths(spec, spec.t0, x, n_paths, n_steps, seed, n_workers=int(w), chunk=int(cfg.get("chunk", 512)))
        cur = (b.states.tobytes(), b.discount_integral.tobytes())
        if ref is None:
            ref = cur
        elif cur != ref:
            mismatches += 1
    return BoundCheck("reproducibility", float(mismatches), 0.0, 0.0, {"problem": spec.describe(), "seed": seed}, {})


@kind("norms")
def _norms(cfg, seed, base_dir):
    """Seminorm against brute force, STANDARD/TRIPLE_BAR bracket, transform/shift commutation."""
    out = []
    rng = np.random.default_rng(seed)
    worst = 0.0
    for n, d in ((200, 1), (300, 2), (400, 3)):
        pts = rng.uniform(-3, 3, (n, d))
        vals = np.sin(pts).sum(axis=1) + 0.1 * (pts**2).sum(axis=1)
        worst = max(worst, abs(spaces.holder_seminorm(pts, vals, 0.5) - spaces.holder_bruteforce(pts, vals, 0.5)))
    out.append(BoundCheck("holder_bruteforce", worst, 0.0, 0.0, {"seed": seed}, {}, name=f"{cfg['name']}/holder"))
    kappa = float(cfg.get("kappa", 10.0))
    cloud = spaces.mixed_cloud(1, 10.0, 201, 256, seed=0)
    X = cloud.points
    x = X[:, 0]
    ratios = {}
    for label, derivs in norm_test_functions(x).items():
        for p, beta in ((0, 0.5), (1, 0.5), (2, 0.5)):
            r = spaces.norm_ratio(X, {k: v for k, v in derivs.items() if sum(k) <= p}, 1, p, beta, cloud.descriptor)[0]
            ratios[f"{label}/p{p}"] = r
    finite = [r for r in ratios.values() if math.isfinite(r)]
    spread = max(max(finite), 1.0 / min(finite))
    out.append(BoundCheck("norm_equivalence", spread, kappa, 0.0, {"cloud": cloud.descriptor}, {"ratios": ratios}, name=f"{cfg['name']}/equivalence"))
    spec = build_family("polynomial", q=1)
    a = shift_zeroth_order(spaces.transform_to_bounded(spec, 1), 0.7)
    b = spaces.transform_to_bounded(shift_zeroth_order(spec, 0.7), 1)
    pts = rng.uniform(-5, 5, (64, 1))
    diff = 0.0
    for t in (0.0, 0.3, 0.9):
        for fn in ("b", "c", "f"):
            diff = max(diff, float(np.abs(getattr(a, fn)(t, pts) - getattr(b, fn)(t, pts)).max()))
        diff = max(diff, float(np.abs(a.sigma(t, pts) - b.sigma(t, pts)).max()))
    diff = max(diff, float(np.abs(a.h(pts) - b.h(pts)).max()))
    out.append(BoundCheck("transform_shift_commute", diff, 0.0, 0.0, {"gamma": 0.7, "q": 1}, {}, name=f"{cfg['name']}/commute"))
    return out


def norm_test_functions(x):
    """Shipped test functions with analytic derivatives up to order 2 (1-d)."""
    return {
        "square": {(0,): x**2, (1,): 2 * x, (2,): 2 + 0 * x},
        "weight": {(0,): 1 + x**2, (1,): 2 * x, (2,): 2 + 0 * x},
        "sin": {(0,): np.sin(x), (1,): np.cos(x), (2,): -np.sin(x)},
        "tanh": {(0,): np.tanh(x), (1,): 1 / np.cosh(x) ** 2, (2,): -2 * np.tanh(x) / np.cosh(x) ** 2},
        "xsin": {(0,): x * np.sin(x), (1,): np.sin(x) + x * np.cos(x), (2,): 2 * np.cos(x) - x * np.sin(x)},
    }


# ---------------------------------------------------------------- runner


@dataclass
class SuiteResult:
    records: List[dict]
    failures: List[str]
    planted: List[str] = field(default_factory=list)
    integrity: List[str] = field(default_factory=list)
    negative_controls: bool = False
    elapsed: float = 0.0

    @property
    def exit_status(self):
        return 0 if not self.failures else 1

    def summary(self):
        lines = []
        for r in self.records:
            mark = "PASS" if r["passed"] else "FAIL"
            ctl = " (negative control)" if r.get("negative_control") else ""
            lines.append(f"{mark} {r['name']} [{r['tag']}]{ctl}")
        lines.append(f"{len(self.records)} records, {len(self.failures)} failures, {self.elapsed:.1f} s")
        for name in self.planted:
            lines.append(f"planted failure: {name}")
        for name in self.integrity:
            lines.append(f"integrity failure: negative control {name} passed")
        for name in self.failures:
            if name not in self.planted and name not in self.integrity:
                lines.append(f"failure: {name}")
        return "\n".join(lines)


def load_suite(path=None):
    if path is None:
        text = resources.files("kolmogorov_fk.harness").joinpath("data/default_suite.toml").read_text()
        return tomllib.loads(text), None
    with open(path, "rb") as fh:
        try:
            return tomllib.load(fh), os.path.dirname(os.path.abspath(path))
        except tomllib.TOMLDecodeError as exc:
            raise SuiteConfigError(f"{path}: {exc}") from exc


def _run_one(cfg, suite_seed, base_dir):
    name = cfg.get("name")
    if not name:
        raise SuiteConfigError("every check needs a name")
    seed = int(cfg["seed"]) if "seed" in cfg else derive_seed(suite_seed, name)
    try:
        runner = KINDS[cfg["kind"]]
    except KeyError:
        result = [BoundCheck("error", math.nan, math.nan, 0.0, {}, {"error": f"unknown kind {cfg.get('kind')!r}"})]
    else:
        try:
            result = runner(cfg, seed, base_dir)
        except Exception as exc:  # recorded, never aborts the suite
            result = [BoundCheck(cfg["kind"], math.nan, math.nan, 0.0, {}, {"error": repr(exc), "traceback": traceback.format_exc()})]
    if not isinstance(result, list):
        result = [result]
    out = []
    for rec in result:
        if rec.name is None:
            rec.name = name
        d = rec.to_dict()
        d["check"] = name
        d["kind"] = cfg["kind"]
        d["negative_control"] = bool(cfg.get("negative_control", False))
        d["seed"] = seed
        out.append(d)
    return out


def run_suite(config=None, report_path=None, negative_controls=False, n_workers=1, summary_path=None) -> SuiteResult:
    """Run every check in ``config`` (path, dict, or None for the shipped default)."""
    start = time.perf_counter()
    if isinstance(config, dict):
        doc, base_dir = config, None
    else:
        doc, base_dir = load_suite(config)
    suite = doc.get("suite", {})
    seed = int(suite.get("seed", 0))
    entries = [c for c in doc.get("check", []) if negative_controls or not c.get("negative_control", False)]
    names = [c.get("name") for c in entries]
    if len(set(names)) != len(names):
        raise SuiteConfigError("check names must be unique")
    if n_workers > 1:
        with ThreadPoolExecutor(max_workers=n_workers) as pool:
            parts = list(pool.map(lambda c: _run_one(c, seed, base_dir), entries))
    else:
        parts = [_run_one(c, seed, base_dir) for c in entries]
    records = [r for p in parts for r in p]
    failures, planted, integrity = [], [], []
    for r in records:
        if r["negative_control"]:
            if r["passed"]:
                integrity.append(r["name"])
                failures.append(r["name"])
            else:
                planted.append(r["name"])
                failures.append(r["name"])
        elif not r["passed"]:
            failures.append(r["name"])
    result = SuiteResult(records, failures, planted, integrity, negative_controls, time.perf_counter() - start)
    if report_path is not None:
        with open(report_path, "w") as fh:
            json.dump(records, fh, indent=2)
            fh.write("\n")
    if summary_path is not None:
        with open(summary_path, "w") as fh:
            fh.write(result.summary() + "\n")
    return result


__all__ = ["run_suite", "load_suite", "SuiteResult", "SuiteConfigError", "KINDS", "SCHEMA_VERSION"]

import math
from statistics import NormalDist

import numpy as np
import pytest

from kolmogorov_fk import fk
from kolmogorov_fk.grid import Box
from kolmogorov_fk.harness import oracles
from kolmogorov_fk.problem import fields as F
from kolmogorov_fk.problem.families import build_family
from kolmogorov_fk.problem.spec import shift_zeroth_order, unshift_factor, with_data
from kolmogorov_fk.rng import derive_seed
from kolmogorov_fk.sde import simulate_paths

from helpers import expr_spec


def test_payoff_deterministic_discount():
    spec = expr_spec(["0"], [["1"]], potential="2", terminal="1")
    b = simulate_paths(spec, 0.0, [0.3], 20, 10, seed=0)
    assert np.allclose(fk.discounted_payoff(b, spec), math.exp(-2), rtol=1e-14)


def test_payoff_running_source():
    spec = expr_spec(["0"], [["1"]], potential="1", source="1")
    b = simulate_paths(spec, 0.0, [0.0], 5, 100, seed=0)
    exact = 1 - math.exp(-1)
    # trapezoid on both integrals: O(dt^2)
    assert np.abs(fk.discounted_payoff(b, spec) - exact).max() <= 1e-4
    err = [abs(fk.discounted_payoff(simulate_paths(spec, 0.0, [0.0], 2, n, seed=0), spec)[0] - exact) for n in (10, 20, 40)]
    assert err[0] / err[1] == pytest.approx(4, rel=0.05) and err[1] / err[2] == pytest.approx(4, rel=0.05)


def test_payoff_zero_data():
    spec = expr_spec(["0"], [["1"]], potential="1")
    b = simulate_paths(spec, 0.0, [0.0], 10, 10, seed=0)
    assert np.array_equal(fk.discounted_payoff(b, spec), np.zeros(10))


def test_left_quadrature_switch():
    spec = expr_spec(["0"], [["1"]], potential="1", source="1")
    b = simulate_paths(spec, 0.0, [0.0], 2, 50, seed=0)
    left = fk.discounted_payoff(b, spec, "left")[0]
    # left rectangle of e^{-s} overestimates by about dt/2 * (1 - e^{-1})
    assert left - (1 - math.exp(-1)) == pytest.approx(0.01 * (1 - math.exp(-1)), rel=0.05)
    with pytest.raises(ValueError):
        fk.discounted_payoff(b, spec, "simpson")


def test_heat_value_against_oracle(heat):
    est = fk.estimate_value(heat, 0.0, [2.0], 40_000, 50, seed=1)
    exact = float(oracles.heat_square(0.0, np.array([[2.0]]), 1.0, 1.0, 1.0)[0])
    assert exact == pytest.approx(6 * math.exp(-1))
    assert abs(est.mean - exact) <= 3 * est.stderr
    assert est.kind == "value" and est.stderr > 0


def test_constant_case_exact(const_spec):
    est = fk.estimate_value(const_spec, 0.2, [1.0], 100, 20, seed=0)
    assert est.stderr == 0.0
    assert est.mean == pytest.approx(3 * math.exp(-0.7 * 0.8), rel=1e-14)


def test_growth_bound_polynomial():
    spec = build_family("polynomial", q=1)
    small = [abs(fk.estimate_value(spec, 0.0, [r], 4000, 20, seed=2).mean) / (1 + r * r) for r in (0.0, 0.5, 1.0)]
    C = max(small)
    far = fk.estimate_value(spec, 0.0, [4.0], 4000, 20, seed=2)
    assert abs(far.mean) <= C * (1 + 16)


def test_linearity_exact_common_seed():
    base = expr_spec(["-0.5*x1"], [["1"]], potential="1 + 0.1*sin(x1)", growth={"drift": "linear"})
    h1, h2 = F.from_expression("x1^2", 1), F.from_expression("cos(x1)", 1)
    f1, f2 = F.from_expression("0.3", 1), F.from_expression("tanh(x1)", 1)
    s1 = with_data(base, terminal=h1, source=f1)
    s2 = with_data(base, terminal=h2, source=f2)
    s12 = with_data(base, terminal=F.combine([h1, h2], [2.0, -3.0]), source=F.combine([f1, f2], [2.0, -3.0]))
    a = fk.payoff_samples(s1, 0.0, [0.4], 500, 30, seed=7)
    b = fk.payoff_samples(s2, 0.0, [0.4], 500, 30, seed=7)
    c = fk.payoff_samples(s12, 0.0, [0.4], 500, 30, seed=7)
    assert np.allclose(c, 2 * a - 3 * b, rtol=1e-12, atol=1e-12)


@pytest.mark.parametrize("kappa", [0.1, 1.0])
def test_monotone_in_potential(kappa):
    spec = build_family("ornstein_uhlenbeck")
    raised = with_data(spec, potential=F.plus_constant(spec.potential, kappa))
    lo = fk.payoff_samples(raised, 0.0, [1.0], 1000, 20, seed=3)
    hi = fk.payoff_samples(spec, 0.0, [1.0], 1000, 20, seed=3)
    assert np.all(lo <= hi)
    assert lo.mean() < hi.mean()


def test_gamma_shift_consistency():
    spec = build_family("polynomial", q=1)
    gamma = 0.6
    w = fk.estimate_value(shift_zeroth_order(spec, gamma), 0.0, [0.5], 2000, 200, seed=4)
    u = fk.estimate_value(spec, 0.0, [0.5], 2000, 200, seed=4)
    assert float(unshift_factor(spec, gamma, 0.0)) * w.mean == pytest.approx(u.mean, rel=1e-4)


@pytest.mark.parametrize("family", ["heat", "ornstein_uhlenbeck", "geometric", "linear_growth", "polynomial"])
def test_stderr_halves(family):
    spec = build_family(family)
    e1 = fk.estimate_value(spec, 0.0, [1.0], 4000, 10, seed=5).stderr
    e4 = fk.estimate_value(spec, 0.0, [1.0], 16000, 10, seed=5).stderr
    assert e4 / e1 == pytest.approx(0.5, rel=0.2)


def test_antithetic_stderr_uses_pair_means(heat):
    est = fk.estimate_value(heat, 0.0, [1.0], 2000, 10, seed=1, antithetic=True)
    s = fk.payoff_samples(heat, 0.0, [1.0], 2000, 10, seed=1, antithetic=True)
    pairs = 0.5 * (s[0::2] + s[1::2])
    assert est.stderr == pytest.approx(pairs.std(ddof=1) / math.sqrt(1000), rel=1e-12)
    assert est.mean == pytest.approx(s.mean(), rel=1e-14)


def test_gradient_against_oracle(heat):
    g = fk.estimate_gradient(heat, 0.0, [2.0], 20_000, 50, seed=1)
    exact = oracles.heat_square_gradient(0.0, np.array([[2.0]]), 1.0, 1.0, 1.0)[0]
    assert exact[0] == pytest.approx(4 * math.exp(-1))
    assert abs(g.mean[0] - exact[0]) <= 3 * g.stderr[0]
    assert g.kind == "gradient" and g.mean.shape == (1,)


def test_gradient_zero_for_constant_data(const_spec):
    g = fk.estimate_gradient(const_spec, 0.0, [0.5], 200, 10, seed=0)
    assert np.array_equal(g.mean, [0.0]) and np.array_equal(g.stderr, [0.0])


def test_gradient_matches_common_seed_bump():
    spec = build_family("polynomial", q=1)
    x, eps, n = np.array([0.8]), 1e-3, 4000
    g = fk.estimate_gradient(spec, 0.0, x, n, 50, seed=2)
    up = fk.payoff_samples(spec, 0.0, x + eps, n, 50, seed=2)
    dn = fk.payoff_samples(spec, 0.0, x - eps, n, 50, seed=2)
    diff = (up - dn) / (2 * eps)
    se = math.hypot(g.stderr[0], diff.std(ddof=1) / math.sqrt(n))
    assert abs(g.mean[0] - diff.mean()) <= 3 * se + 1e-4


def test_gradient_two_dimensional():
    spec = build_family("heat", d=2, a=0.5, c=0.3)
    x = np.array([1.0, -0.5])
    g = fk.estimate_gradient(spec, 0.0, x, 20_000, 20, seed=3)
    exact = 2 * x * math.exp(-0.3)
    assert np.all(np.abs(g.mean - exact) <= 3 * g.stderr)


def test_single_node_reproduces_estimate_value(heat):
    vals, errs = fk.estimate_nodes(heat, [0.25], [[1.5]], [17], 500, 30, seed=9)
    est = fk.estimate_value(heat, 0.25, [1.5], 500, 30, derive_seed(9, 17))
    assert vals[0] == est.mean and errs[0] == est.stderr


def test_grid_constant_case(const_spec):
    box = Box((-1.0,), (1.0,), (3,), 0.0, 1.0, 4)
    fld = fk.estimate_on_grid(const_spec, box, 10, 8, seed=0)
    for k, t in enumerate(box.times()):
        assert np.allclose(fld.values[k], 3 * math.exp(-0.7 * (1 - t)), rtol=1e-14)
    assert np.array_equal(fld.stderr, np.zeros(box.shape))


def test_grid_nodes_use_derived_seeds(heat):
    box = Box((-1.0,), (1.0,), (3,), 0.0, 0.5, 2)
    fld = fk.estimate_on_grid(heat, box, 200, 10, seed=4)
    # node (slice 1, point 2) has id 1 * 3 + 2
    t = box.times()[1]
    steps = fk.node_steps(10, heat.T, t, 0.0)
    est = fk.estimate_value(heat, t, [1.0], 200, steps, derive_seed(4, 5))
    assert fld.values[1, 2] == est.mean


@pytest.mark.slow
def test_grid_heat_oracle(heat):
    box = Box((-2.0,), (2.0,), (21,), 0.0, 1.0, 10)
    fld = fk.estimate_on_grid(heat, box, 100_000, 20, seed=0)
    ref = np.stack([oracles.heat_square(t, box.points(), 1.0, 1.0, 1.0) for t in box.times()])
    err = np.abs(fld.values - ref)
    nodewise = err <= np.maximum(3 * fld.stderr, 2e-3)
    # 231 nodes at 3 sigma each fail jointly about half the time, so the joint
    # bound uses the Sidak-corrected z for a 5% family-wise rate
    n = nodewise.size
    z = NormalDist().inv_cdf(1 - (1 - 0.95 ** (1 / n)) / 2)
    assert nodewise.mean() >= 0.99
    assert np.all(err <= np.maximum(z * fld.stderr, 2e-3))


def test_grid_rejects_bad_box(heat):
    with pytest.raises(ValueError):
        fk.estimate_on_grid(heat, Box((-1.0, -1.0), (1.0, 1.0), (3, 3), 0.0, 1.0, 2), 10, 5)
    with pytest.raises(ValueError):
        fk.estimate_on_grid(heat, Box((-1.0,), (1.0,), (3,), 0.0, 2.0, 2), 10, 5)


def test_estimate_to_dict(heat):
    d = fk.estimate_value(heat, 0.0, [1.0], 100, 5, seed=0).to_dict()
    assert d["kind"] == "value" and d["n_paths"] == 100 and d["x"] == [1.0]

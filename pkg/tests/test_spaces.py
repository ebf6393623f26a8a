import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from kolmogorov_fk import fd, spaces
from kolmogorov_fk.grid import Box
from kolmogorov_fk.harness import oracles
from kolmogorov_fk.problem.families import build_family
from kolmogorov_fk.problem.spec import shift_zeroth_order
from kolmogorov_fk.spaces import Variant

from helpers import expr_spec


def test_weight_examples():
    assert spaces.weight(1, (3.0, 4.0)) == 26.0
    assert spaces.weight(2, (0.0, 0.0)) == 1.0
    assert spaces.weight(0, (5.0, -7.0)) == 1.0
    assert np.array_equal(spaces.weight(0, np.ones((3, 2))), np.ones(3))


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 3), st.lists(st.floats(-50, 50), min_size=2, max_size=2), st.floats(1.0, 3.0))
def test_weight_even_monotone(q, x, scale):
    x = np.array(x)
    w = spaces.weight(q, x)
    assert w >= 1.0
    assert spaces.weight(q, -x) == w
    assert spaces.weight(q, scale * x) >= w


def test_holder_examples():
    assert spaces.holder_seminorm([0.0, 1.0, 2.0], [3.0, 3.0, 3.0], 0.5) == 0.0
    x = np.array([0, 0.25, 0.5, 0.75, 1.0])
    assert spaces.holder_seminorm(x, x, 0.5) == pytest.approx(1.0, rel=1e-15)
    x = np.array([0, 0.01, 0.25, 1.0])
    val, pair = spaces.holder_seminorm(x, np.sqrt(x), 0.5, return_pair=True)
    assert val == pytest.approx(1.0, rel=1e-15)
    assert 0 in pair


def test_holder_rejects_bad_input():
    with pytest.raises(ValueError):
        spaces.holder_seminorm([0.0, 0.0, 1.0], [1.0, 2.0, 3.0], 0.5)
    with pytest.raises(ValueError):
        spaces.holder_seminorm([0.0, 1.0], [1.0, 2.0], 1.5)
    with pytest.raises(ValueError):
        spaces.holder_seminorm([0.0], [1.0], 0.5)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**31), st.floats(-5, 5).filter(lambda v: abs(v) > 1e-3), st.integers(1, 3))
def test_holder_homogeneous_and_monotone(seed, lam, d):
    rng = np.random.default_rng(seed)
    pts = rng.uniform(-1, 1, (40, d))
    vals = np.sin(3 * pts).sum(axis=1)
    base = spaces.holder_seminorm(pts, vals, 0.7)
    assert spaces.holder_seminorm(pts, lam * vals, 0.7) == pytest.approx(abs(lam) * base, rel=1e-12)
    more = np.concatenate([pts, rng.uniform(-1, 1, (10, d))])
    assert spaces.holder_seminorm(more, np.sin(3 * more).sum(axis=1), 0.7) >= base


def test_holder_subsamples_large_clouds():
    rng = np.random.default_rng(0)
    pts = rng.uniform(-1, 1, (300, 1))
    vals = pts[:, 0] ** 2
    full = spaces.holder_seminorm(pts, vals, 0.5)
    sub = spaces.holder_seminorm(pts, vals, 0.5, limit=50)
    assert sub <= full
    assert sub == spaces.holder_seminorm(pts, vals, 0.5, limit=50)


@pytest.mark.parametrize("d", [1, 2, 3])
def test_holder_equals_bruteforce(d):
    rng = np.random.default_rng(d)
    pts = rng.uniform(-2, 2, (300, d))
    vals = np.exp(-np.sum(pts**2, axis=1)) + 0.3 * pts[:, 0]
    assert spaces.holder_seminorm(pts, vals, 0.4) == spaces.holder_bruteforce(pts, vals, 0.4)


def _x_cloud():
    cloud = spaces.tensor_cloud(1, 10.0, 401)
    return cloud, cloud.points[:, 0]


def test_norm_of_weight_itself():
    cloud, x = _x_cloud()
    P = 1 + x**2
    res = spaces.weighted_norm(cloud.points, {(0,): P}, 1, 0, 0.5, Variant.STANDARD, cloud.descriptor)
    assert res.sup_terms["D0"] == pytest.approx(1.0, rel=1e-15)
    assert res.seminorm_terms["D0"] <= 1e-14
    assert res.value == pytest.approx(1.0)


def test_norm_of_zero():
    cloud, x = _x_cloud()
    derivs = {(0,): 0 * x, (1,): 0 * x, (2,): 0 * x}
    for v in Variant:
        assert spaces.weighted_norm(cloud.points, derivs, 1, 2, 0.5, v).value == 0.0
    assert math.isnan(spaces.norm_ratio(cloud.points, derivs, 1, 2, 0.5)[0])


def test_square_ratio_within_bracket():
    cloud = spaces.mixed_cloud(1, 10.0, 201, 256, seed=0)
    x = cloud.points[:, 0]
    r, a, b = spaces.norm_ratio(cloud.points, {(0,): x**2}, 1, 0, 0.5, cloud.descriptor)
    assert 0.1 <= r <= 10
    assert a.variant == "STANDARD" and b.variant == "TRIPLE_BAR"


def test_quotient_derivatives_closed_form():
    x = np.linspace(-3, 3, 13)
    f = {(0,): np.sin(x), (1,): np.cos(x), (2,): -np.sin(x)}
    out = spaces.quotient_derivatives(f, 1, x[:, None], 2)
    P, dP, d2P = 1 + x**2, 2 * x, 2.0
    g = np.sin(x) / P
    g1 = np.cos(x) / P - np.sin(x) * dP / P**2
    g2 = -np.sin(x) / P - 2 * np.cos(x) * dP / P**2 - np.sin(x) * (d2P / P**2 - 2 * dP**2 / P**3)
    assert np.allclose(out[(0,)], g) and np.allclose(out[(1,)], g1) and np.allclose(out[(2,)], g2)


def test_missing_derivatives():
    x = np.linspace(0, 1, 5)
    with pytest.raises(spaces.MissingDerivativeError):
        spaces.weighted_norm(x[:, None], {(0,): x}, 1, 1)


def test_norm_record_serialisation():
    cloud, x = _x_cloud()
    res = spaces.weighted_norm(cloud.points, {(0,): x, (1,): 1 + 0 * x}, 1, 1, 0.5, "TRIPLE_BAR", cloud.descriptor)
    doc = json.loads(res.to_json())
    assert set(doc) == {"variant", "q", "p", "beta", "value", "terms", "cloud"}
    assert doc["cloud"]["kind"] == "tensor"
    assert json.loads(spaces.norms_record([res]))[0]["value"] == res.value


def test_grid_derivatives_of_polynomial():
    box = Box((-2.0, -1.0), (2.0, 1.0), (41, 21), 0.0, 1.0, 1)
    X = box.points()
    vals = (X[:, 0] ** 2 * X[:, 1]).reshape(box.counts)
    pts, derivs = spaces.grid_derivatives(vals, box, 2)
    assert np.allclose(derivs[(1, 1)], 2 * pts[:, 0], atol=1e-12)
    assert np.allclose(derivs[(2, 0)], 2 * pts[:, 1], atol=1e-12)
    assert np.allclose(derivs[(0, 2)], 0.0, atol=1e-12)


def test_clouds():
    s = spaces.sobol_cloud(2, 3.0, 100, seed=1)
    assert len(s) == 128 and np.all(np.abs(s.points) <= 3.0)
    assert np.array_equal(s.points, spaces.sobol_cloud(2, 3.0, 100, seed=1).points)
    m = spaces.mixed_cloud(1, 1.0, 11, 16)
    assert len(np.unique(m.points, axis=0)) == len(m)
    c = spaces.cloud_from_points([0.0, 1.0, 2.0])
    assert c.points.shape == (3, 1)


def test_transform_example_values():
    spec = build_family("heat", a=1.0, c=1.0)
    tr = spaces.transform_to_bounded(spec, 1)
    X = np.array([[0.0], [1.0], [2.0]])
    P, dP = 1 + X[:, 0] ** 2, 2 * X[:, 0]
    assert np.allclose(tr.b(0.0, X)[:, 0], 2 * dP / P)
    assert np.allclose(tr.c(0.0, X), 1.0 - 2.0 / P)
    assert tr.c(0.0, X)[0] == pytest.approx(-1.0)
    assert np.allclose(tr.h(X), X[:, 0] ** 2 / P)
    assert tr.c0 == pytest.approx(-1.0)


def test_transform_of_weight_terminal_is_one():
    spec = build_family("heat", terminal="weight")
    tr = spaces.transform_to_bounded(spec, 1)
    X = np.linspace(-9, 9, 31)[:, None]
    assert np.allclose(tr.h(X), 1.0, rtol=1e-15)


def test_transform_rejects():
    spec = build_family("heat")
    with pytest.raises(ValueError):
        spaces.transform_to_bounded(spec, 0)
    with pytest.raises(ValueError):
        spaces.transform_to_bounded(spaces.transform_to_bounded(spec, 1), 1)


def test_transformed_solution_times_weight_matches_oracle():
    spec = build_family("heat", a=1.0, c=1.0)
    tr = spaces.transform_to_bounded(spec, 1)
    exact = lambda t, X: oracles.heat_square(t, X, 1.0, 1.0, 1.0)  # noqa: E731
    box = Box((-6.0,), (6.0,), (241,), 0.0, 1.0, 200)
    fld = fd.solve_dirichlet(tr, box, None, lambda t, X: exact(t, X) / spaces.weight(1, X))
    P = spaces.weight(1, box.points()).reshape(box.counts)
    ref = np.stack([exact(t, box.points()).reshape(box.counts) for t in box.times()])
    assert np.abs(fld.values * P - ref).max() <= 5e-3


@settings(max_examples=20, deadline=None)
@given(st.floats(-2, 2, allow_nan=False), st.integers(1, 2), st.integers(1, 2))
def test_transform_commutes_with_shift(gamma, q, d):
    spec = build_family("polynomial", q=q, d=d)
    a = shift_zeroth_order(spaces.transform_to_bounded(spec, q), gamma)
    b = spaces.transform_to_bounded(shift_zeroth_order(spec, gamma), q)
    X = np.random.default_rng(0).uniform(-4, 4, (50, d))
    for t in (0.0, 0.6):
        for fn in ("b", "sigma", "c", "f"):
            assert np.array_equal(getattr(a, fn)(t, X), getattr(b, fn)(t, X))
    assert np.array_equal(a.h(X), b.h(X))


def test_weight_derivative_ratios_bounded():
    X = np.linspace(-1e3, 1e3, 20001)[:, None]
    # q = 1, d = 1: 2|x| / sqrt(1 + x^2) <= 2 and 2 / (1 + x^2) * (1 + x^2) = 2
    assert spaces.weight_derivative_ratios(1, X, 1).max() <= 2.0
    assert spaces.weight_derivative_ratios(1, X, 2).max() == pytest.approx(2.0)
    # q = 2: 12 u (1 + u) / (1 + u^2) with u = x^2 peaks at u = 1 + sqrt(2)
    C = 6 * (1 + math.sqrt(2))
    Y = np.random.default_rng(1).uniform(-50, 50, (5000, 1))
    assert spaces.weight_derivative_ratios(2, Y, 2).max() <= C * (1 + 1e-12)
    x = math.sqrt(1 + math.sqrt(2))
    assert spaces.weight_derivative_ratios(2, np.array([[x]]), 2)[0] == pytest.approx(C, rel=1e-12)

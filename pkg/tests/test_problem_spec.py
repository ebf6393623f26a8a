import dataclasses
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from kolmogorov_fk.problem import fields as F
from kolmogorov_fk.problem.families import FAMILIES, build_family
from kolmogorov_fk.problem.spec import (
    ProblemSpec,
    evaluate_coefficients,
    half_outer,
    sample_box_points,
    scale_data,
    shift_zeroth_order,
    unshift_factor,
)

from helpers import expr_spec


def test_constant_diffusion_gives_unit_a():
    spec = expr_spec(["0"], [["sqrt(2)"]])
    out = evaluate_coefficients(spec, 0.0, [0.3])
    assert out["a"][0, 0] == pytest.approx(1.0, abs=4e-16)


def test_rank_one_diffusion():
    spec = expr_spec(["0", "0"], [["1"], ["0"]])
    a = evaluate_coefficients(spec, 0.0, [1.0, 2.0])["a"]
    assert np.array_equal(a, [[0.5, 0.0], [0.0, 0.0]])


def test_linear_growth_diffusion_at_three():
    spec = expr_spec(["0"], [["1 + abs(x1)"]], growth={"diffusion": "linear"})
    assert evaluate_coefficients(spec, 0.0, [3.0])["a"][0, 0] == 8.0


def test_batch_shapes(heat):
    X = np.zeros((5, 1))
    out = evaluate_coefficients(heat, 0.0, X)
    assert out["b"].shape == (5, 1) and out["sigma"].shape == (5, 1, 1)
    assert out["a"].shape == (5, 1, 1) and out["c"].shape == (5,) and out["f"].shape == (5,)
    with pytest.raises(ValueError):
        evaluate_coefficients(heat, 0.0, np.zeros((2, 3)))


@pytest.mark.parametrize("family", sorted(FAMILIES))
@pytest.mark.parametrize("d", [1, 2, 3])
def test_a_is_half_sigma_sigma_t(family, d):
    spec = build_family(family, d=d)
    X = sample_box_points(d, -5, 5, 200, seed=d)
    for t in (spec.t0, 0.5 * spec.T):
        s = spec.sigma(t, X)
        a = spec.a(t, X)
        ref = 0.5 * np.einsum("nik,njk->nij", s, s)
        assert np.all(np.abs(a - ref) <= 4 * np.spacing(np.maximum(np.abs(ref), np.finfo(float).tiny)))
        assert np.array_equal(a, np.swapaxes(a, 1, 2))


def _rel_err(an, fd):
    scale = np.maximum(np.abs(an), 1e-3)
    return float((np.abs(an - fd) / scale).max())


@pytest.mark.parametrize("family", sorted(FAMILIES))
def test_analytic_gradients_match_central_differences(family):
    spec = build_family(family, d=2)
    rng = np.random.default_rng(3)
    X = rng.uniform(-4, 4, (1000, 2))
    t = 0.3
    fields = list(spec.drift) + [g for row in spec.diffusion for g in row] + [spec.potential, spec.source, spec.terminal]
    for g in fields:
        if not g.has_gradient or g.is_constant:
            continue
        assert _rel_err(g.gradient(t, X), g.fd_gradient(t, X)) <= 1e-5


def test_shift_zero_is_identity(heat):
    assert shift_zeroth_order(heat, 0.0) is heat


def test_shift_example():
    spec = expr_spec(["0"], [["1"]], potential="2", source="1 + x1^2", T=1.0, c0=2.0)
    s = shift_zeroth_order(spec, 1.0)
    X = np.linspace(-2, 2, 9)[:, None]
    for t in (0.0, 0.4, 1.0):
        assert np.allclose(s.c(t, X), 1.0)
        # source picks up exp(gamma (T - t)) so that u = exp(-gamma (T - t)) w
        assert np.allclose(s.f(t, X), math.exp(1.0 - t) * spec.f(t, X))
    assert s.c0 == 1.0
    assert np.array_equal(s.h(X), spec.h(X))
    assert float(unshift_factor(spec, 1.0, 0.0)) == pytest.approx(math.exp(-1.0))


@settings(max_examples=30, deadline=None)
@given(st.floats(-3, 3, allow_nan=False), st.sampled_from(sorted(FAMILIES)))
def test_shift_inverse_pair(gamma, family):
    spec = build_family(family, d=1)
    back = shift_zeroth_order(shift_zeroth_order(spec, gamma), -gamma)
    X = np.linspace(-3, 3, 13)[:, None]
    for t in (0.0, 0.5):
        for fn in ("b", "c", "f", "a"):
            assert np.allclose(getattr(back, fn)(t, X), getattr(spec, fn)(t, X), rtol=1e-12, atol=1e-12)
    assert back.c0 == pytest.approx(spec.c0, abs=1e-12)


def test_scale_data_scales_h_and_f():
    spec = build_family("polynomial", q=1)
    big = scale_data(spec, 10.0)
    X = np.linspace(-3, 3, 7)[:, None]
    assert np.allclose(big.h(X), 10 * spec.h(X))
    assert np.allclose(big.f(0.2, X), 10 * spec.f(0.2, X))
    assert np.array_equal(big.c(0.2, X), spec.c(0.2, X))


def test_spec_validation():
    one = (F.constant(0.0),)
    diff = ((F.constant(1.0),),)
    base = dict(d=1, m=1, T=1.0, drift=one, diffusion=diff, potential=F.constant(0.0), source=F.constant(0.0), terminal=F.constant(0.0))
    ProblemSpec(**base)
    with pytest.raises(ValueError):
        ProblemSpec(**dict(base, T=0.0))
    with pytest.raises(ValueError):
        ProblemSpec(**dict(base, q=-1))
    with pytest.raises(ValueError):
        ProblemSpec(**dict(base, drift=one * 2))
    with pytest.raises(ValueError):
        ProblemSpec(**dict(base, diffusion=((F.constant(1.0), F.constant(0.0)),)))


def test_half_outer_symmetric(rng):
    s = rng.normal(size=(10, 3, 2))
    a = half_outer(s)
    assert np.array_equal(a, np.swapaxes(a, 1, 2))
    assert np.all(np.linalg.eigvalsh(a) >= -1e-14)


def test_families_registry():
    with pytest.raises(ValueError):
        build_family("nope")
    heat = build_family("heat", a=0.5, c=2.0)
    X = np.array([[1.5]])
    assert heat.a(0.0, X)[0, 0, 0] == pytest.approx(0.5)
    assert heat.c(0.0, X)[0] == 2.0 and heat.h(X)[0] == 2.25
    poly = build_family("polynomial", q=2)
    assert poly.h(np.array([[2.0]]))[0] == 17.0
    assert poly.q == 2 and poly.c0 == pytest.approx(0.8)


def test_constant_field_builders():
    g = F.constant(2.5)
    X = np.zeros((4, 2))
    assert np.array_equal(g(0.0, X), np.full(4, 2.5))
    assert g.is_constant and np.array_equal(g.gradient(0, X), np.zeros((4, 2)))
    lin = F.linear([1.0, -2.0], 0.5)
    assert lin(0.0, np.array([[1.0, 1.0]]))[0] == -0.5
    with pytest.raises(ValueError):
        F.CoefficientField(func=lambda t, X: X[:, 0], growth="huge")


def test_expression_field_falls_back_to_differences():
    g = F.from_expression("sin(x1) * x2", 2)
    X = np.array([[0.3, 2.0]])
    assert np.allclose(g.gradient(0.0, X), [[2 * math.cos(0.3), math.sin(0.3)]], rtol=1e-7)


def test_spec_is_frozen(heat):
    with pytest.raises(dataclasses.FrozenInstanceError):
        heat.T = 2.0

import json

import numpy as np
import pytest

from kolmogorov_fk.problem.assumptions import Profile, validate_assumptions

from helpers import expr_spec


def test_linear_drift_passes_basic():
    spec = expr_spec(["x1"], [["1"]], potential="2", c0=1.0, growth={"drift": "linear"})
    rep = validate_assumptions(spec, (-5, 5))
    assert rep.passed, rep.failures()
    assert rep.entry("K1_ellipticity").estimate == pytest.approx(0.5)
    assert rep.entry("A1_lipschitz").estimate == pytest.approx(1.0, rel=1e-6)


def test_quadratic_drift_fails_linear_growth():
    spec = expr_spec(["x1^2"], [["1"]], growth={"drift": "polynomial"})
    rep = validate_assumptions(spec, (-5, 5))
    e = rep.entry("A2_linear_growth")
    assert not e.passed
    assert abs(abs(e.violating_point[0]) - 5) < 0.5


def test_linear_growth_diffusion_band_strict():
    spec = expr_spec(["0"], [["1 + abs(x1)"]], growth={"diffusion": "linear"})
    rep = validate_assumptions(spec, (-5, 5), profile=Profile.STRICT)
    band = rep.entry("diffusion_band")
    assert band.passed
    assert band.detail["C1"] <= 1.0 <= band.detail["C2"] + 1e-12


def test_degenerate_diffusion_fails_ellipticity():
    spec = expr_spec(["0"], [["x1"]], growth={"diffusion": "linear"})
    rep = validate_assumptions(spec, (-1, 1))
    assert not rep.entry("K1_ellipticity").passed
    assert not rep.passed


def test_potential_below_c0_flagged():
    spec = expr_spec(["0"], [["1"]], potential="0.5 + sin(x1)", c0=0.0)
    e = validate_assumptions(spec, (-4, 4)).entry("c_lower_bound")
    assert not e.passed
    assert np.sin(e.violating_point[0]) < -0.5


def test_kink_flagged_by_strict_profile():
    smooth = expr_spec(["tanh(x1)"], [["1"]])
    kink = expr_spec(["abs(x1 - 0.123)"], [["1"]], growth={"drift": "linear"})
    ok = validate_assumptions(smooth, (-3, 3), profile="strict", n_samples=1024)
    bad = validate_assumptions(kink, (-3, 3), profile="strict", n_samples=1024)
    assert ok.entry("D2_b_bounded").passed
    assert not bad.entry("D2_b_bounded").passed


def test_report_serialises(heat):
    rep = validate_assumptions(heat, (-3, 3), profile="strict")
    json.dumps(rep.to_dict())
    assert rep.profile == "strict"


def test_needs_two_samples(heat):
    with pytest.raises(ValueError):
        validate_assumptions(heat, (-1, 1), n_samples=1)

import numpy as np
import pytest

from kolmogorov_fk.problem.families import build_family
from kolmogorov_fk.problem.io import ProblemFileError, dumps_problem, load_problem, loads_problem, save_problem

from helpers import expr_spec

HEAT_FILE = """
name = "my-heat"
[dimensions]
d = 1
[coefficients]
family = "heat"
params = { a = 0.5, c = 2.0 }
[constants]
T = 2.0
"""

EXPR_FILE = """
name = "ou"
[dimensions]
d = 2
m = 2
[coefficients]
drift = ["-x1", "-x2"]
diffusion = [["1", "0"], ["0", "0.5"]]
potential = "1 + 0.1*tanh(x1)"
terminal = "x1^2 + x2^2"
[coefficients.growth]
drift = "linear"
terminal = "polynomial"
[constants]
T = 1.5
c0 = 0.9
q = 1
"""


def _same(a, b):
    X = np.random.default_rng(0).uniform(-3, 3, (50, a.d))
    for t in (a.t0, 0.5 * a.T):
        for fn in ("b", "sigma", "c", "f"):
            assert np.array_equal(getattr(a, fn)(t, X), getattr(b, fn)(t, X))
    assert np.array_equal(a.h(X), b.h(X))
    assert (a.T, a.t0, a.c0, a.q, a.d, a.m) == (b.T, b.t0, b.c0, b.q, b.d, b.m)


def test_family_file():
    spec = loads_problem(HEAT_FILE)
    assert spec.name == "my-heat" and spec.T == 2.0
    _same(spec, build_family("heat", a=0.5, c=2.0, T=2.0, name="my-heat"))


def test_expression_file_round_trip(tmp_path):
    spec = loads_problem(EXPR_FILE)
    assert spec.c0 == 0.9 and spec.q == 1
    path = tmp_path / "p.toml"
    save_problem(spec, path)
    _same(spec, load_problem(path))


def test_family_round_trip():
    spec = build_family("ornstein_uhlenbeck", d=2, theta=0.7, T=0.5)
    _same(spec, loads_problem(dumps_problem(spec)))


def test_transformed_spec_round_trip():
    spec = expr_spec(["0"], [["1"]], potential="2", terminal="x1^2", gamma=0.5, weight_q=1)
    _same(spec, loads_problem(dumps_problem(spec)))


@pytest.mark.parametrize(
    "text",
    [
        "not toml [",
        "[dimensions]\nd = 1\n",
        "[dimensions]\nd = 1\n[coefficients]\ndrift = ['0']\ndiffusion = [['1']]\n",
        "[dimensions]\nd = 1\n[coefficients]\ndrift = ['0', '1']\ndiffusion = [['1']]\n[constants]\nT = 1.0\n",
        "[dimensions]\nd = 1\n[coefficients]\ndrift = ['0']\ndiffusion = [['1']]\n[constants]\nT = 1.0\nbogus = 3\n",
        "[coefficients]\nfamily = 'heat'\nparams = { nope = 1 }\n",
        "[coefficients]\ndrift = ['0']\ndiffusion = [['1']]\n[constants]\nT = 1.0\n",
    ],
)
def test_bad_files(text):
    with pytest.raises(ProblemFileError):
        loads_problem(text)


def test_expression_syntax_error_surfaces():
    with pytest.raises(ValueError):
        loads_problem("[dimensions]\nd = 1\n[coefficients]\ndrift = ['x1 +']\ndiffusion = [['1']]\n[constants]\nT = 1.0\n")

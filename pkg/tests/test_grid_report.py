import io
import json
import math

import numpy as np
import pytest

from kolmogorov_fk.grid import Box, Field, read_field_csv, write_field_csv
from kolmogorov_fk.report import SCHEMA_VERSION, BoundCheck, GrowthReport


@pytest.mark.parametrize(
    "kw",
    [
        dict(lower=(0.0,), upper=(1.0, 2.0), counts=(5,)),
        dict(lower=(1.0,), upper=(1.0,), counts=(5,)),
        dict(lower=(0.0,), upper=(1.0,), counts=(2,)),
        dict(lower=(0.0,), upper=(1.0,), counts=(5,), t1=1.0, t2=1.0),
        dict(lower=(0.0,), upper=(1.0,), counts=(5,), n_t=0),
    ],
)
def test_box_validation(kw):
    args = dict(t1=0.0, t2=1.0, n_t=4)
    args.update(kw)
    with pytest.raises(ValueError):
        Box(**args)


def test_box_geometry():
    box = Box((-1.0, 0.0), (1.0, 2.0), (5, 5), 0.0, 1.0, 4)
    assert box.shape == (5, 5, 5)
    assert box.spacing == pytest.approx((0.5, 0.5))
    assert box.points().shape == (25, 2)
    assert box.times()[-1] == 1.0
    mask = box.boundary_mask()
    assert mask.sum() == 25 - 9 and not mask[2, 1]
    inner = box.shrink(1)
    assert inner.counts == (3, 3)
    assert inner.lower == pytest.approx((-0.5, 0.5))


def test_box_shrink_keeps_spacing():
    box = Box.cube(2, 3.0, 13, 0.0, 1.0, 10)
    inner = box.shrink(2)
    assert inner.spacing == pytest.approx(box.spacing)
    assert inner.counts == (9, 9)


def test_field_rejects_bad_values():
    box = Box((0.0,), (1.0,), (3,), 0.0, 1.0, 1)
    with pytest.raises(ValueError):
        Field(box, np.zeros((3, 3)))
    with pytest.raises(ValueError):
        Field(box, np.full(box.shape, np.nan))
    with pytest.raises(ValueError):
        Field(box, np.zeros(box.shape), stderr=np.zeros(3))


def test_field_csv_round_trip(tmp_path, rng):
    box = Box((-1.0, 0.5), (1.0, 2.5), (4, 3), 0.25, 1.0, 3)
    fld = Field(box, rng.normal(size=box.shape), "MC", np.abs(rng.normal(size=box.shape)))
    path = tmp_path / "f.csv"
    write_field_csv(fld, str(path))
    back = read_field_csv(str(path))
    assert back.source == "MC"
    assert back.box.describe() == box.describe()
    assert np.array_equal(back.values, fld.values)
    assert np.array_equal(back.stderr, fld.stderr)
    buf = io.StringIO()
    write_field_csv(fld, buf)
    assert buf.getvalue().splitlines() == path.read_text().splitlines()
    assert path.read_text().splitlines()[1] == "t,x1,x2,value,stderr"


def test_field_restrict():
    box = Box((0.0,), (4.0,), (5,), 0.0, 1.0, 2)
    fld = Field(box, np.arange(15.0).reshape(3, 5))
    sub = fld.restrict(1)
    assert sub.box.counts == (3,)
    assert np.array_equal(sub.values, fld.values[:, 1:4])


def test_bound_check_logic():
    assert BoundCheck("t", 1.0, 1.0).passed
    assert not BoundCheck("t", 1.1, 1.0).passed
    assert BoundCheck("t", 1.1, 1.0, tolerance=0.2).passed
    assert not BoundCheck("t", math.nan, 1.0).passed
    d = BoundCheck("t", math.nan, 1.0, detail={"x": np.array([1.0, math.inf])}).to_dict()
    assert d["schema_version"] == SCHEMA_VERSION
    assert d["passed"] is False
    json.dumps(d)
    assert d["detail"]["x"] == [1.0, "inf"]


def test_growth_report_logic():
    g = GrowthReport("g", [1, 2, 4], [1, 4, 16], 2.0, 2.0, 0.5, sharp_exponent=1.0, lower=1.9)
    assert g.passed and not g.passed_sharp
    assert not GrowthReport("g", [], [], 2.6, 2.0, 0.5).passed
    assert not GrowthReport("g", [], [], 1.0, 2.0, 0.5, lower=1.5).passed
    assert not GrowthReport("g", [], [], math.nan, 2.0, 0.5).passed
    assert GrowthReport("g", [], [], 1.0, 2.0, 0.5).passed_sharp is None
    assert json.loads(json.dumps(g.to_dict()))["record"] == "GrowthReport"

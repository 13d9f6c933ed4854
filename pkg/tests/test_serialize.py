"""Artifact writers: exact float round-trips and fixed layouts."""

import json
import math

import numpy as np
import pytest

from sislab import Grid, TrajectoryRecord
from sislab.serialize import (fmt_float, json_dumps, write_csv,
                              write_snapshot, write_timeseries)


@pytest.mark.parametrize("x", [
    0.1, 1.0 / 3.0, math.pi, 1e-300, 6.02214076e23, -2.5e-10, 0.0, -0.0,
    1.7976931348623157e308, 5e-324,
])
def test_float_rendering_round_trips_exactly(x):
    assert float(fmt_float(x)) == x


def test_float_rendering_nonfinite():
    assert fmt_float(float("nan")) == "nan"
    assert fmt_float(float("inf")) == "inf"
    assert fmt_float(float("-inf")) == "-inf"


def test_json_preserves_order_and_types():
    doc = {"zeta": 1, "alpha": True, "mid": {"b": 2.5, "a": None}}
    text = json_dumps(doc)
    assert text.index('"zeta"') < text.index('"alpha"') < text.index('"mid"')
    assert text.index('"b"') < text.index('"a"')
    assert '"alpha": true' in text               # bool is not rendered as int
    assert text.endswith("\n")
    assert json.loads(text) == {"zeta": 1, "alpha": True,
                                "mid": {"b": 2.5, "a": None}}


def test_json_numpy_values_and_nonfinite_to_null():
    doc = {"v": np.float64(0.1), "n": np.int64(3), "flag": np.bool_(False),
           "arr": np.array([1.5, float("nan")]), "empty": [], "none": {}}
    parsed = json.loads(json_dumps(doc))
    assert parsed == {"v": 0.1, "n": 3, "flag": False,
                      "arr": [1.5, None], "empty": [], "none": {}}


def test_json_float_precision_survives_round_trip():
    values = [0.1 + 0.2, 1.0 / 3.0, 2.0 ** -52]
    parsed = json.loads(json_dumps({"v": values}))
    assert parsed["v"] == values                  # bitwise equality via 17g


def test_json_rejects_unknown_types():
    with pytest.raises(TypeError):
        json_dumps({"bad": {1, 2}})


def test_json_deterministic():
    doc = {"a": [0.1, 0.2, {"k": 3}], "b": "text"}
    assert json_dumps(doc) == json_dumps(doc)


def _record(t, **functionals):
    return TrajectoryRecord(t=t, mass_S=2.0, mass_I=1.0, linf_S=2.5,
                            linf_I=1.25, grad2_S=0.0, grad2_I=0.0,
                            clamp_total=0.0, cum_I=0.5 * t,
                            functionals=functionals)


class _FakeTraj:
    def __init__(self, records):
        self.records = records


def test_timeseries_layout(tmp_path):
    path = tmp_path / "ts.csv"
    traj = _FakeTraj([_record(0.0, V=3.0), _record(0.5, V=1.0), _record(1.0)])
    write_timeseries(path, traj, ["V"])
    lines = path.read_text().splitlines()
    assert lines[0] == "t,mass_S,mass_I,linf_S,linf_I,clamp_mass,V"
    assert lines[1].split(",")[0] == "0"
    assert lines[1].split(",")[-1] == "3"
    assert lines[3].split(",")[-1] == ""          # missing functional -> empty
    assert len(lines) == 4


def test_snapshot_layout_1d(tmp_path):
    g = Grid(extents=(1.0,), cells=(4,))
    S = np.array([1.0, 2.0, 3.0, 4.0])
    I = 0.1 * S
    path = tmp_path / "snap.csv"
    write_snapshot(path, g, S, I)
    lines = path.read_text().splitlines()
    assert lines[0] == "x,S,I"
    assert len(lines) == 5
    first = lines[1].split(",")
    assert float(first[0]) == 0.125 and float(first[1]) == 1.0


def test_snapshot_layout_2d_row_major(tmp_path):
    g = Grid(extents=(1.0, 1.0), cells=(2, 3))
    c = g.coordinate_fields()
    S = c["x"] + 10 * c["y"]
    I = np.zeros(g.shape)
    path = tmp_path / "snap.csv"
    write_snapshot(path, g, S, I)
    lines = path.read_text().splitlines()
    assert lines[0] == "x,y,S,I"
    assert len(lines) == 7
    # row-major: y varies fastest
    y_col = [float(l.split(",")[1]) for l in lines[1:]]
    assert y_col == pytest.approx([1 / 6, 3 / 6, 5 / 6, 1 / 6, 3 / 6, 5 / 6])


def test_generic_csv_cell_policy(tmp_path):
    path = tmp_path / "t.csv"
    write_csv(path, ["a", "b", "c", "d", "e"],
              [[1, 0.1, True, None, "txt"], [2, float("nan"), False, 3.5, "y"]])
    lines = path.read_text().splitlines()
    assert lines[1] == "1,0.10000000000000001,true,,txt"
    assert lines[2] == "2,nan,false,3.5,y"

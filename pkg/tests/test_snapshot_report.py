import csv
import json
import math
from enum import Enum

import numpy as np
import pytest

from src.errors import ReportIOError, SnapshotFormatError
from src.event_bus import ProvenanceEnvelope
from src.grid import ComplexField, PeriodicGrid, RadialField, RadialGrid
from src.report import emit_report, format_cell, to_jsonable, write_csv
from src.snapshot import HEADER, decode_snapshot, encode_snapshot, read_snapshot, write_snapshot


def test_header_is_packed():
    assert HEADER.itemsize == 38


def test_radial_snapshot_keeps_values_and_time(tmp_path):
    g = RadialGrid(5, 16.0, 50)
    field = RadialField(g, np.stack([np.exp(-g.r), np.cos(g.r)]))
    path = write_snapshot(tmp_path / "psi.bin", field, time=1.25)
    back, t = read_snapshot(path)
    assert isinstance(back, RadialField) and back.grid == g
    np.testing.assert_array_equal(back.values, field.values)
    assert t == 1.25
    assert path.stat().st_size == HEADER.itemsize + 8 * 2 * 50


def test_periodic_snapshot_keeps_complex_values():
    box = PeriodicGrid(2, 8, 3.0)
    rng = np.random.default_rng(0)
    field = ComplexField(box, rng.normal(size=(1, 8, 8)) + 1j * rng.normal(size=(1, 8, 8)))
    back, _ = decode_snapshot(encode_snapshot(field))
    assert isinstance(back, ComplexField) and back.grid == box
    np.testing.assert_array_equal(back.values, field.values)


def test_corrupt_snapshots_are_rejected():
    g = RadialGrid(4, 8.0, 10)
    data = encode_snapshot(RadialField(g, np.ones(10)))
    with pytest.raises(SnapshotFormatError):
        decode_snapshot(b"XXXXXX" + data[6:])
    with pytest.raises(SnapshotFormatError):
        decode_snapshot(data[:-8])
    with pytest.raises(SnapshotFormatError):
        decode_snapshot(data[:20])


def test_missing_snapshot(tmp_path):
    with pytest.raises(ReportIOError):
        read_snapshot(tmp_path / "absent.bin")


class Color(Enum):
    RED = "red"


def test_to_jsonable_handles_numpy_and_nonfinite():
    out = to_jsonable({"a": np.float64(math.nan), "b": np.arange(3), "c": (np.int64(2), math.inf), "d": Color.RED,
                       "timestamp": 1.0}, deterministic=True)
    assert out == {"a": None, "b": [0, 1, 2], "c": [2, None], "d": "red"}


def test_format_cell_round_trips_floats():
    assert float(format_cell(0.1)) == 0.1
    assert format_cell(None) == "" and format_cell(True) == "true"


def test_empty_csv_holds_header(tmp_path):
    path = write_csv(tmp_path / "empty.csv", [], ["beta", "classification"])
    assert path.read_text() == "beta,classification\n"


def test_deterministic_reports_are_identical(tmp_path):
    chain = [ProvenanceEnvelope("stage", {"beta": 0.5}, {"value": 1.0}, "completed", 0.3).to_dict()]
    rows = [{"x": 0.1, "y": 2}]
    for name in ("a", "b"):
        emit_report({"result": 1.5}, tmp_path / f"{name}.json", tmp_path / f"{name}.csv", {"seed": 1},
                    deterministic=True, rows=rows, grids=[RadialGrid(5, 16.0, 100)], seed=1, chain=chain)
    assert (tmp_path / "a.json").read_bytes() == (tmp_path / "b.json").read_bytes()
    payload = json.loads((tmp_path / "a.json").read_text())
    assert "timestamp" not in payload["provenance"]["chain"][0]
    assert payload["provenance"]["seed"] == 1
    with (tmp_path / "a.csv").open() as f:
        assert list(csv.DictReader(f)) == [{"x": "0.10000000000000001", "y": "2"}]

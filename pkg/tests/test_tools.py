"""Tests for the CSV writers."""

import numpy as np
import pytest

from tsdgate import metrics
from tsdgate import tools
from tsdgate.ensembles import SweepRow
from tsdgate.propagator import PropagationRecord


@pytest.fixture
def rows():
    return [
        SweepRow({"temperature_uk": 5.0}, 4.31e-4, 1.25),
        SweepRow({"temperature_uk": 10.0}, 8.09e-4, 2.5),
    ]


class TestTable:
    def test_round_values(self, rows, tmp_path):
        path = tools.write_table(rows, tmp_path / "t.csv", header=["config: x"])
        table = tools.read_table(path)
        assert [r["temperature_uk"] for r in table] == [5.0, 10.0]
        assert table[1]["error"] == pytest.approx(8.09e-4, rel=1e-10)
        assert table[0]["wall_time_s"] == pytest.approx(1.25)

    def test_header_and_columns(self, rows, tmp_path):
        path = tools.write_table(rows, tmp_path / "t.csv", header=["config: x", "reproduces: y"])
        lines = open(path).read().splitlines()
        assert lines[:2] == ["# config: x", "# reproduces: y"]
        assert lines[2] == "temperature_uk,error,wall_time_s"

    def test_deterministic_without_wall_time(self, rows, tmp_path):
        first = tools.write_table(rows, tmp_path / "a.csv", wall_time=False)
        later = [SweepRow(r.coordinates, r.error, 99.0) for r in rows]
        second = tools.write_table(later, tmp_path / "b.csv", wall_time=False)
        assert open(first, "rb").read() == open(second, "rb").read()

    def test_empty(self, tmp_path):
        with pytest.raises(ValueError):
            tools.write_table([], tmp_path / "t.csv")

    def test_creates_directory(self, rows, tmp_path):
        path = tools.write_table(rows, tmp_path / "nested" / "dir" / "t.csv")
        assert (tmp_path / "nested" / "dir" / "t.csv").is_file()
        assert path.endswith("t.csv")


class TestMatrix:
    def test_complex_values(self, tmp_path):
        u = np.exp(0.3j) * metrics.cnot_matrix()
        path = tools.write_matrix(u, tmp_path / "u.csv", header=["config: ideal"])
        np.testing.assert_allclose(tools.read_matrix(path), u, atol=1e-14)

    def test_layout(self, tmp_path):
        path = tools.write_matrix(np.eye(4), tmp_path / "u.csv")
        lines = open(path).read().splitlines()
        assert lines[0].startswith("# rows: output state")
        assert lines[1].split(",")[:2] == ["re_00", "im_00"]
        assert len(lines) == 6


def test_record(tmp_path):
    times = np.linspace(0, 1e-6, 3)
    populations = np.array([[1.0, 0.0], [0.5, 0.5], [0.0, 1.0]])
    record = PropagationRecord(("11", "1r"), times, populations)
    path = tools.write_record(record, tmp_path / "trace.csv", header=["input |11>"])
    lines = open(path).read().splitlines()
    assert lines[0] == "# input |11>"
    assert lines[1] == "time_s,p_11,p_1r"
    data = np.loadtxt(lines[2:], delimiter=",")
    np.testing.assert_allclose(data[:, 0], times)
    np.testing.assert_allclose(data[:, 1:], populations)


def test_quantities(tmp_path):
    path = tools.write_quantities(
        [("delta_ghz", 1.3132, "GHz"), ("field_ratio", 0.289, "")], tmp_path / "q.csv"
    )
    lines = open(path).read().splitlines()
    assert lines[0] == "quantity,value,unit"
    name, value, unit = lines[1].split(",")
    assert (name, unit) == ("delta_ghz", "GHz")
    assert float(value) == pytest.approx(1.3132)
    assert lines[2].endswith(",")

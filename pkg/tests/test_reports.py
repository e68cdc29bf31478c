"""
Tests for src/reports/csv_writer.py.
"""

import numpy as np
import pytest

from src.reports.csv_writer import (
    CONVERGENCE_HEADER, SWEEP_HEADER, StudyResult, format_value, summary_lines, write_csv,
)


def _sweep_result():
    result = StudyResult("l-shape-sweep", list(SWEEP_HEADER))
    result.add_row(1.0, 0.39, 1.04, 0.58, 1.5e-3)
    result.add_row(10.0, np.float64(0.3955), 1.049, 0.5837, 1.6e-4)
    result.summary["slope"] = -0.98
    return result


class TestStudyResult:

    def test_row_length_must_match_header(self):
        result = StudyResult("convergence", list(CONVERGENCE_HEADER))
        with pytest.raises(ValueError):
            result.add_row(2, "even")

    def test_column(self):
        assert _sweep_result().column("lambda") == [1.0, 10.0]

    def test_failed_run_keeps_header_and_fills_nan(self):
        result = _sweep_result()
        result.add_failure("penalty 100", RuntimeError("no convergence"), 100.0)
        assert result.header == SWEEP_HEADER
        assert result.rows[-1][0] == 100.0
        assert all(np.isnan(v) for v in result.rows[-1][1:])
        assert result.failures == ["penalty 100: no convergence"]

        result = StudyResult("convergence", list(CONVERGENCE_HEADER))
        result.add_failure("mesh", RuntimeError("stuck"), 4, "even")
        assert result.rows[0][:2] == [4, "even"]
        assert np.isnan(result.rows[0][2])


class TestFormatting:

    @pytest.mark.parametrize("value,text", [
        (3, "3"),
        (0.1, "1.000000000000e-01"),
        (np.float64(-2.5), "-2.500000000000e+00"),
        (True, "true"),
        (None, ""),
        ("even", "even"),
        (float("nan"), "nan"),
    ])
    def test_format_value(self, value, text):
        assert format_value(value) == text

    def test_summary_lines_are_sorted(self):
        result = _sweep_result()
        result.summary["reference_rx"] = 0.4
        assert summary_lines(result) == ["reference_rx = 4.000000000000e-01", "slope = -9.800000000000e-01"]


class TestWriteCsv:

    def test_header_and_rows(self, tmp_path):
        path = write_csv(_sweep_result(), tmp_path)
        lines = path.read_text(encoding="utf-8").splitlines()
        assert path.name == "l-shape-sweep.csv"
        assert lines[0] == "lambda,rx,ry,rz,err"
        assert lines[1].startswith("1.000000000000e+00,3.900000000000e-01,")
        assert lines[2].endswith(",1.600000000000e-04")

    def test_output_is_byte_stable(self, tmp_path):
        first = write_csv(_sweep_result(), tmp_path / "a").read_bytes()
        second = write_csv(_sweep_result(), tmp_path / "b", filename="other.csv").read_bytes()
        assert first == second
        assert b"\r" not in first

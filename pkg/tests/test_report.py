"""Tests for report assembly and persistence."""

import argparse
import json
import tempfile
from fractions import Fraction
from pathlib import Path

import pytest

from singscope.classify import Interval
from singscope.report import (
    SCHEMA,
    AnalysisReport,
    exact,
    fit_entry,
    fitted,
    interval,
    meta_section,
    read_exact,
)
from singscope.verify import FitResult, Verdict


def _config() -> argparse.Namespace:
    return argparse.Namespace(depth=6, max_steps=20, seed=0, grid=256, points=8)


def _fit(exponent: float) -> FitResult:
    return FitResult("sublevel", exponent, 0.001, (0.25, 1.0), ((-2.0, -1.5), (0.0, 0.0)), Fraction(3, 4), 0.05)


def _report() -> AnalysisReport:
    return AnalysisReport(
        input={"expression": "x2^2 + x1^4", "canonical": "x1^4 + x2^2", "exact": True},
        meta=meta_section(_config(), 16),
        verification=[fit_entry(_fit(0.75)), fit_entry(_fit(0.9))],
    )


class TestValues:
    """Test cases for the provenance helpers."""

    def test_exact(self) -> None:
        """Test rationals written as p/q strings."""
        assert exact(Fraction(10, 7)) == {"value": "10/7", "provenance": "exact"}
        assert exact(3) == {"value": "3", "provenance": "exact"}
        assert exact(None) is None

    def test_fitted(self) -> None:
        """Test floats marked as fitted."""
        assert fitted(0.75) == {"value": 0.75, "provenance": "fitted"}
        assert fitted(None) is None

    def test_interval(self) -> None:
        """Test a bracketed critical exponent."""
        bracket = interval(Interval(Fraction(3, 2), Fraction(5, 3)))
        assert bracket["lower"] == {"value": "3/2", "provenance": "exact"}
        assert bracket["upper"] == {"value": "5/3", "provenance": "exact"}
        assert interval(Fraction(8, 5)) == {"value": "8/5", "provenance": "exact"}

    def test_read_exact(self) -> None:
        """Test reading back an exact value and refusing a fitted one."""
        assert read_exact({"value": "10/7", "provenance": "exact"}) == Fraction(10, 7)
        with pytest.raises(ValueError, match="Expected an exact value"):
            read_exact({"value": 0.75, "provenance": "fitted"})


class TestAnalysisReport:
    """Test cases for AnalysisReport."""

    def test_meta_section(self) -> None:
        """Test the schema marker and run parameters."""
        meta = meta_section(_config(), 16)
        assert meta["schema"] == SCHEMA
        assert meta["order"] == 16
        assert set(meta["libraries"]) == {"numpy", "scipy", "sympy"}

    def test_verdicts(self) -> None:
        """Test verdicts read from the verification entries."""
        assert _report().verdicts == [Verdict.PASS, Verdict.FAIL]

    def test_save_and_load(self) -> None:
        """Test that a saved report loads back equal."""
        with tempfile.TemporaryDirectory() as tmpdir:
            path = Path(tmpdir) / "report.json"
            report = _report()
            report.save(path)
            assert AnalysisReport.load(path) == report

    def test_unknown_schema(self) -> None:
        """Test that a foreign JSON document is rejected."""
        data = json.loads(_report().to_json())
        data["meta"]["schema"] = "other/1"
        with pytest.raises(ValueError, match="Unsupported report schema"):
            AnalysisReport.from_dict(data)

    def test_load_errors(self) -> None:
        """Test a missing file and invalid JSON."""
        with tempfile.TemporaryDirectory() as tmpdir:
            with pytest.raises(ValueError, match="Failed to load report"):
                AnalysisReport.load(Path(tmpdir) / "missing.json")
            broken = Path(tmpdir) / "broken.json"
            broken.write_text("{not json")
            with pytest.raises(ValueError, match="Failed to load report"):
                AnalysisReport.load(broken)

    def test_write_csv(self) -> None:
        """Test one row per fitted point."""
        with tempfile.TemporaryDirectory() as tmpdir:
            path = Path(tmpdir) / "points.csv"
            _report().write_csv(path)
            rows = path.read_text().splitlines()
            assert rows[0] == "kind,log2_x,log2_value"
            assert rows[1:] == ["sublevel,-2.0,-1.5", "sublevel,0.0,0.0"] * 2

    def test_summary(self) -> None:
        """Test the printed fit lines."""
        lines = _report().summary().splitlines()
        assert lines[0] == "input: x2^2 + x1^4  (order 16)"
        assert lines[1] == "sublevel: 0.7500 +- 0.0010 (predicted 3/4, equal) PASS"
        assert lines[2] == "sublevel: 0.9000 +- 0.0010 (predicted 3/4, equal) FAIL"

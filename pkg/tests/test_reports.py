"""Test the machine-readable reports."""

import csv
import io
import json
import math
from pathlib import Path

import numpy as np
import pytest

from fvlab.reports import format_value, render, sort_rows, write_json, write_report

ROWS = [
    {"n": 8, "eps": 0.1, "code": "optimal", "nR_bits": 5, "rate": 5 / 8},
    {"n": 4, "eps": 0.1, "code": "type-size", "nR_bits": 3, "rate": 0.75},
    {"n": 4, "eps": 0.1, "code": "2s-fv", "nR_bits": 4, "rate": 1.0},
]


def test_format_value() -> None:
    """Test rounding to 12 significant digits and the special values."""
    assert format_value(0.1 + 0.2) == 0.3
    assert format_value(1 / 3) == 0.333333333333
    assert format_value(np.float64(0.5)) == 0.5
    assert isinstance(format_value(np.int64(3)), int)
    assert format_value(math.inf) == "inf"
    assert format_value(True) is True
    assert format_value(None) is None
    assert format_value(Path("a")) == "a"


def test_sort_rows() -> None:
    """Test the (n, eps, code) order."""
    order = [(row["n"], row["code"]) for row in sort_rows(ROWS)]
    assert order == [(4, "2s-fv"), (4, "type-size"), (8, "optimal")]


def test_render_csv() -> None:
    """Test the CSV layout."""
    text = render(ROWS, "csv")
    rows = list(csv.DictReader(io.StringIO(text)))
    assert text.splitlines()[0] == "n,eps,code,nR_bits,rate"
    assert [row["nR_bits"] for row in rows] == ["4", "3", "5"]


def test_render_json() -> None:
    """Test the JSON layout."""
    rows = json.loads(render(ROWS, "json"))
    assert rows[-1] == {
        "n": 8,
        "eps": 0.1,
        "code": "optimal",
        "nR_bits": 5,
        "rate": 0.625,
    }
    with pytest.raises(ValueError):
        render(ROWS, "xml")


def test_write_report(tmp_path: Path, capsys) -> None:
    """Test writing to a file and to standard output."""
    path = tmp_path / "report.csv"
    text = write_report(ROWS, "csv", path)
    assert path.read_text() == text
    write_report(ROWS, "json")
    assert json.loads(capsys.readouterr().out)[0]["n"] == 4


def test_write_json(tmp_path: Path) -> None:
    """Test the JSON summary with nested values."""
    path = tmp_path / "summary.json"
    write_json([{"slope": np.float64(1 / 3), "pass": True, "ns": (1, 2)}], path)
    assert json.loads(path.read_text()) == [
        {"slope": 0.333333333333, "pass": True, "ns": [1, 2]}
    ]

"""
Module for machine-readable reports.

Includes tools to:
- Format report rows with floats at 12 significant digits.
- Sort rows by (n, eps, code) and write them as CSV (with header) or as a JSON
  array of objects, to a file or to standard output.
"""

import csv
import io
import json
import math
import sys
from collections.abc import Iterable, Mapping
from pathlib import Path

from fvlab.logging_tools import logger

# Significant digits of every float in a report
FLOAT_DIGITS = 12


def format_value(value: object) -> object:
    """Return a report value, floats rounded to 12 significant digits."""
    if isinstance(value, bool) or value is None:
        return value
    if isinstance(value, float):
        if not math.isfinite(value):
            return str(value)
        return float(f"{value:.{FLOAT_DIGITS}g}")
    if hasattr(value, "item"):
        # numpy scalars
        return format_value(value.item())
    if isinstance(value, (int, str)):
        return value
    return str(value)


def _sort_key(row: Mapping) -> tuple:
    return (
        row.get("n", 0),
        row.get("eps", 0.0),
        str(row.get("code", row.get("case", ""))),
    )


def sort_rows(rows: Iterable[Mapping]) -> list[dict]:
    """Return formatted copies of the rows sorted by (n, eps, code)."""
    formatted = [
        {key: format_value(value) for key, value in row.items()} for row in rows
    ]
    return sorted(formatted, key=_sort_key)


def render(rows: Iterable[Mapping], fmt: str = "csv") -> str:
    """
    Render rows as text.

    Parameters
    ----------
    rows : iterable of mapping
        Report rows, all keys of all rows become columns.
    fmt : str, optional
        "csv" or "json".

    Returns
    -------
    str
        CSV with a header row, or a JSON array of objects.
    """
    rows = sort_rows(rows)
    match fmt:
        case "json":
            return json.dumps(rows, indent=2) + "\n"
        case "csv":
            columns = list(dict.fromkeys(key for row in rows for key in row))
            buffer = io.StringIO()
            writer = csv.DictWriter(buffer, fieldnames=columns, lineterminator="\n")
            writer.writeheader()
            writer.writerows(rows)
            return buffer.getvalue()
        case _:
            msg = f"Unknown report format '{fmt}'!"
            raise ValueError(msg)


def write_report(
    rows: Iterable[Mapping], fmt: str = "csv", out: str | Path | None = None
) -> str:
    """Write rows to `out`, or to standard output if None, and return the text."""
    text = render(rows, fmt)
    if out is None:
        sys.stdout.write(text)
    else:
        Path(out).write_text(text)
        logger.info(f"Wrote report to '{out}'")
    return text


def write_json(data: object, out: str | Path | None = None) -> str:
    """Write a JSON document (e.g. a fit summary) with formatted floats."""

    def convert(value):
        if isinstance(value, Mapping):
            return {key: convert(item) for key, item in value.items()}
        if isinstance(value, (list, tuple)):
            return [convert(item) for item in value]
        return format_value(value)

    text = json.dumps(convert(data), indent=2) + "\n"
    if out is None:
        sys.stdout.write(text)
    else:
        Path(out).write_text(text)
        logger.info(f"Wrote summary to '{out}'")
    return text

"""Reading and writing datasets, models and reports."""
from __future__ import annotations

import csv
import json
import math
from pathlib import Path

import numpy as np

from .exceptions import NonFinite, ParseError
from .ica import model_from_dict


def read_dataset(path, format="csv", header=False):
    """Read a rectangular numeric CSV table, one observation per row.

    Raises ParseError (with 1-based row and column) for non-numeric or
    ragged rows and NonFinite for NaN or infinite entries.
    """
    if format.lower() != "csv":
        raise ValueError(f"unsupported format {format!r}")
    rows = []
    width = None
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        for lineno, row in enumerate(reader, start=1):
            if header and lineno == 1:
                continue
            if not row or all(not cell.strip() for cell in row):
                continue
            if width is None:
                width = len(row)
            elif len(row) != width:
                raise ParseError(f"expected {width} columns, found {len(row)}", lineno, len(row))
            values = []
            for col, cell in enumerate(row, start=1):
                try:
                    v = float(cell)
                except ValueError:
                    raise ParseError(f"cannot parse {cell.strip()!r} as a number", lineno, col) from None
                if not math.isfinite(v):
                    raise NonFinite(f"non-finite value at row {lineno}, column {col}")
                values.append(v)
            rows.append(values)
    if not rows:
        raise ParseError("no data rows")
    return np.array(rows, dtype=float)


def format_real(v):
    return format(float(v), ".17g")


def write_dataset(path, data, header=None):
    X = np.atleast_2d(np.asarray(data, dtype=float))
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        if header:
            writer.writerow(header)
        for row in X:
            writer.writerow([format_real(v) for v in row])


def write_json(path, obj):
    Path(path).write_text(json.dumps(obj, indent=2, allow_nan=True) + "\n")


def read_json(path):
    return json.loads(Path(path).read_text())


def save_model(path, result):
    """Write a FitResult (or anything with ``to_dict``) as JSON."""
    write_json(path, result.to_dict())


def load_model(path):
    return model_from_dict(read_json(path))

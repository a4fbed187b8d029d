"""Headerless comma-separated matrices and JSON sidecars."""
from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np


class CsvFormatError(OSError):
    """A matrix file could not be parsed."""


def read_matrix(path) -> np.ndarray:
    path = Path(path)
    rows: list[list[float]] = []
    width = None
    with path.open(newline="") as fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            if not row or all(not cell.strip() for cell in row):
                continue
            try:
                values = [float(cell) for cell in row]
            except ValueError as exc:
                raise CsvFormatError(f"{path}: row {lineno}: {exc}") from None
            if width is None:
                width = len(values)
            elif len(values) != width:
                raise CsvFormatError(
                    f"{path}: row {lineno} has {len(values)} fields, expected {width}"
                )
            rows.append(values)
    if not rows:
        raise CsvFormatError(f"{path}: no data")
    return np.array(rows, dtype=float)


def fmt(x) -> str:
    """Shortest decimal string that round-trips to the same double."""
    return repr(float(x))


def write_matrix(path, m) -> None:
    m = np.asarray(m, dtype=float)
    with Path(path).open("w", newline="") as fh:
        for row in m:
            fh.write(",".join(fmt(x) for x in row))
            fh.write("\n")


def write_json(path, obj) -> None:
    with Path(path).open("w") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")

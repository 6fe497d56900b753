"""Dataset <-> CSV with header ``x1,...,xp,y``.

Values are written with ``repr`` (shortest round-trip form) so a dump read
back is bit-identical to the in-memory dataset.
"""

from __future__ import annotations

import csv
import io
import math
from pathlib import Path

import numpy as np

from vimp.datagen import Dataset
from vimp.errors import SchemaMismatchError, VimpError


class CsvParseError(VimpError, ValueError):
    """Malformed dataset file; the message names the row and column."""


def dataset_csv(data: Dataset) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow([f"x{j + 1}" for j in range(data.p)] + ["y"])
    for row, target in zip(data.x, data.y):
        w.writerow([repr(float(v)) for v in row] + [repr(float(target))])
    return buf.getvalue()


def write_dataset(data: Dataset, path: str | Path) -> None:
    Path(path).write_text(dataset_csv(data), encoding="utf-8", newline="")


def parse_dataset(text: str, source: str = "<csv>") -> Dataset:
    rows = list(csv.reader(io.StringIO(text)))
    if not rows:
        raise CsvParseError(f"{source}: empty file")
    header = [h.strip() for h in rows[0]]
    p = len(header) - 1
    expected = [f"x{j + 1}" for j in range(p)] + ["y"]
    if p < 1 or header != expected:
        raise SchemaMismatchError(f"{source}: header must be {','.join(expected) if p >= 1 else 'x1,...,xp,y'}, "
                                  f"got {','.join(header)}")
    values = np.empty((len(rows) - 1, p + 1))
    for r, row in enumerate(rows[1:], start=2):
        if len(row) != p + 1:
            raise CsvParseError(f"{source}: row {r} has {len(row)} fields, expected {p + 1}")
        for c, cell in enumerate(row):
            try:
                v = float(cell)
            except ValueError:
                raise CsvParseError(f"{source}: row {r}, column {header[c]}: not a number: {cell!r}") from None
            if not math.isfinite(v):
                raise CsvParseError(f"{source}: row {r}, column {header[c]}: non-finite value {cell!r}")
            values[r - 2, c] = v
    if values.shape[0] == 0:
        raise CsvParseError(f"{source}: no data rows")
    return Dataset(values[:, :p], values[:, p])


def read_dataset(path: str | Path) -> Dataset:
    path = Path(path)
    return parse_dataset(path.read_text(encoding="utf-8"), str(path))


def split_halves(data: Dataset) -> tuple[Dataset, Dataset]:
    """First ceil(n/2) rows for training, the rest for validation."""
    cut = (data.n + 1) // 2
    return Dataset(data.x[:cut], data.y[:cut]), Dataset(data.x[cut:], data.y[cut:])

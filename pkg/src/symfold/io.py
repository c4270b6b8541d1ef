"""CSV reading and writing.

Numbers are written with 17 significant digits so that every value
survives a write/read round trip exactly.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import EmptyData, ParseError
from .numerics import DataSet


@dataclass(frozen=True)
class CsvData:
    data: DataSet
    predictors: list[str]
    response: str


def fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, (int, np.integer)) and not isinstance(x, bool):
        return str(int(x))
    if isinstance(x, str):
        return x
    x = float(x)
    if math.isnan(x):
        return ""
    return f"{x:.17g}"


def _resolve_column(header: list[str], response) -> int:
    if isinstance(response, (int, np.integer)):
        idx = int(response)
        if not -len(header) <= idx < len(header):
            raise ParseError(f"response column index {idx} out of range (have {len(header)} columns)")
        return idx % len(header)
    if response in header:
        return header.index(response)
    try:
        return _resolve_column(header, int(response))
    except (TypeError, ValueError):
        raise ParseError(f"no column named {response!r} in header") from None


def load_csv(path, response=0) -> CsvData:
    """Read a numeric CSV with a header row.

    ``response`` selects the response column by name or by 0-based index; all
    other columns are predictors.  Any row with a missing or non-numeric cell
    raises :class:`ParseError` naming the offending lines.
    """
    path = Path(path)
    with path.open(newline="") as fh:
        rows = list(csv.reader(fh))
    rows = [r for r in rows if any(cell.strip() for cell in r)]
    if not rows:
        raise EmptyData(f"{path}: file is empty")
    header = [h.strip() for h in rows[0]]
    if len(header) < 2:
        raise ParseError(f"{path}: need a response and at least one predictor column", line=1)
    col = _resolve_column(header, response)
    values = []
    bad = []
    for line, row in enumerate(rows[1:], start=2):
        if len(row) != len(header):
            bad.append((line, min(len(row), len(header)) + 1, "wrong number of cells"))
            continue
        parsed = []
        for j, cell in enumerate(row, start=1):
            try:
                v = float(cell)
            except ValueError:
                bad.append((line, j, f"cannot parse {cell.strip()!r}" if cell.strip() else "missing value"))
                break
            if not math.isfinite(v):
                bad.append((line, j, f"non-finite value {cell.strip()!r}"))
                break
            parsed.append(v)
        else:
            values.append(parsed)
    if bad:
        line, column, why = bad[0]
        lines = ", ".join(str(b[0]) for b in bad)
        raise ParseError(f"{path}: line {line}, column {column}: {why} (bad lines: {lines})", line=line, column=column)
    if not values:
        raise EmptyData(f"{path}: no data rows")
    table = np.array(values)
    keep = [j for j in range(len(header)) if j != col]
    if len(values) < 2:
        raise EmptyData(f"{path}: need at least two data rows")
    return CsvData(DataSet(table[:, col], table[:, keep]), [header[j] for j in keep], header[col])


def write_csv(path_or_file, header, rows):
    def _write(fh):
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(x) for x in row])

    if hasattr(path_or_file, "write"):
        _write(path_or_file)
    else:
        with open(path_or_file, "w", newline="") as fh:
            _write(fh)


def write_dataset(path, data: DataSet, predictors=None, response="y"):
    predictors = predictors or [f"x{j + 1}" for j in range(data.p)]
    rows = (list(x) + [y] for x, y in zip(data.X, data.y))
    write_csv(path, list(predictors) + [response], rows)


def read_direction(path, predictors: list[str]) -> np.ndarray:
    """Read a direction vector from CSV.

    Accepts either the ``predictor,dir1,...`` layout written by ``fit`` (the
    first direction column is used) or a single numeric column with a header.
    """
    with open(path, newline="") as fh:
        rows = [r for r in csv.reader(fh) if any(c.strip() for c in r)]
    if len(rows) < 2:
        raise EmptyData(f"{path}: no direction entries")
    header = rows[0]
    body = rows[1:]
    try:
        if header[0].strip() == "predictor":
            lookup = {r[0].strip(): float(r[1]) for r in body}
            missing = [name for name in predictors if name not in lookup]
            if missing:
                raise ParseError(f"{path}: direction has no entry for {', '.join(missing)}")
            v = np.array([lookup[name] for name in predictors])
        else:
            v = np.array([float(r[0]) for r in body])
    except (ValueError, IndexError) as exc:
        raise ParseError(f"{path}: cannot parse direction ({exc})") from None
    if len(v) != len(predictors):
        raise ParseError(f"{path}: direction has {len(v)} entries, expected {len(predictors)}")
    return v

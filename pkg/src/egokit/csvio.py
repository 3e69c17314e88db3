"""Locale-free numeric CSV and JSON files with atomic replacement."""

from __future__ import annotations

import csv
import json
import os
import tempfile
from pathlib import Path

import numpy as np

from .errors import InvalidConfig


class CsvFormatError(InvalidConfig):
    pass


def fmt(value: float) -> str:
    """17 significant digits, so parsing returns the identical double."""
    if value is None or (isinstance(value, float) and np.isnan(value)):
        return ""
    return "%.17g" % float(value)


def atomic_write_text(path, text: str) -> None:
    """Write to a temporary sibling, fsync, then rename over ``path``."""
    path = Path(path)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", suffix=".tmp", dir=path.parent or ".")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
            fh.flush()
            os.fsync(fh.fileno())
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def table_text(header, rows) -> str:
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(fmt(v) for v in row))
    return "\n".join(lines) + "\n"


def write_table(path, header, rows) -> None:
    atomic_write_text(path, table_text(header, rows))


def read_table(path, allow_empty_cells=False) -> tuple[list[str], np.ndarray]:
    """Read a headed numeric CSV into (header, float matrix).

    Raises :class:`CsvFormatError` naming the row and column of the first
    unparsable cell. Row numbers count the header as row 1.
    """
    path = Path(path)
    try:
        with path.open(newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader, None)
            if not header:
                raise CsvFormatError(f"{path}: missing header row")
            header = [h.strip() for h in header]
            rows = []
            for lineno, raw in enumerate(reader, start=2):
                if not raw or all(not c.strip() for c in raw):
                    continue
                if len(raw) != len(header):
                    raise CsvFormatError(f"{path}: row {lineno} has {len(raw)} cells, header has {len(header)}")
                vals = []
                for col, cell in zip(header, raw):
                    cell = cell.strip()
                    if cell == "" and allow_empty_cells:
                        vals.append(np.nan)
                        continue
                    try:
                        vals.append(float(cell))
                    except ValueError:
                        raise CsvFormatError(f"{path}: row {lineno}, column {col!r}: not a number: {cell!r}") from None
                rows.append(vals)
    except FileNotFoundError:
        raise CsvFormatError(f"{path}: no such file") from None
    data = np.array(rows, dtype=float).reshape(len(rows), len(header))
    return header, data


def dump_json(obj) -> str:
    return json.dumps(obj, indent=2) + "\n"


def write_json(path, obj) -> None:
    atomic_write_text(path, dump_json(obj))


def read_json(path):
    try:
        with open(path) as fh:
            return json.load(fh)
    except FileNotFoundError:
        raise InvalidConfig(f"{path}: no such file") from None
    except json.JSONDecodeError as exc:
        raise InvalidConfig(f"{path}: invalid JSON: {exc}") from None

"""Tabular output: CSV with a '#'-prefixed metadata header, and PGM heatmaps.

Floats are written with ``repr`` (shortest round-trip form), so
``read_table(write_table(...))`` recovers every value bit for bit.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np


@dataclass
class Table:
    columns: list[str]
    rows: list[tuple]
    meta: dict[str, str] = field(default_factory=dict)

    def column(self, name: str) -> np.ndarray:
        j = self.columns.index(name)
        return np.array([r[j] for r in self.rows])


def _format(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return str(bool(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


def _parse(text: str):
    try:
        return int(text)
    except ValueError:
        pass
    try:
        return float(text)
    except ValueError:
        return text


def format_table(columns, rows, meta: dict | None = None) -> str:
    buf = io.StringIO()
    for key, value in (meta or {}).items():
        text = _format(value)
        if "\n" in text:
            raise ValueError(f"metadata value for {key!r} spans lines")
        buf.write(f"# {key}={text}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        if len(row) != len(columns):
            raise ValueError(f"row has {len(row)} fields, expected {len(columns)}")
        writer.writerow([_format(v) for v in row])
    return buf.getvalue()


def write_table(path, columns, rows, meta: dict | None = None) -> Path:
    path = Path(path)
    path.write_text(format_table(columns, rows, meta))
    return path


def parse_table(text: str) -> Table:
    meta = {}
    lines = text.splitlines()
    i = 0
    while i < len(lines) and lines[i].startswith("#"):
        key, _, value = lines[i][1:].strip().partition("=")
        meta[key] = value
        i += 1
    reader = csv.reader(lines[i:])
    try:
        columns = next(reader)
    except StopIteration:
        raise ValueError("table has no column header") from None
    rows = [tuple(_parse(v) for v in r) for r in reader if r]
    return Table(columns, rows, meta)


def read_table(path) -> Table:
    return parse_table(Path(path).read_text())


def write_pgm(path, values) -> Path:
    """Binary 8-bit grayscale image of a 2-d array (row 0 at the top),
    linearly scaled so the maximum is white."""
    arr = np.asarray(values, float)
    if arr.ndim != 2 or arr.size == 0:
        raise ValueError("heatmap needs a nonempty 2-d array")
    lo, hi = float(np.nanmin(arr)), float(np.nanmax(arr))
    span = hi - lo if hi > lo else 1.0
    pixels = np.nan_to_num(np.round(255 * (arr - lo) / span), nan=0.0).astype(np.uint8)
    path = Path(path)
    header = f"P5\n{arr.shape[1]} {arr.shape[0]}\n255\n".encode()
    path.write_bytes(header + pixels.tobytes())
    return path


def read_pgm(path) -> np.ndarray:
    data = Path(path).read_bytes()
    parts = data.split(b"\n", 3)
    if parts[0] != b"P5":
        raise ValueError("not a binary PGM file")
    width, height = (int(v) for v in parts[1].split())
    return np.frombuffer(parts[3], dtype=np.uint8).reshape(height, width)

"""Deterministic CSV and manifest serialization.

Floats are written in the shortest decimal form that parses back to the same
double (``repr``), with a trailing ``.0`` dropped so ``4.0`` becomes ``4``.
NaN is written as an empty field.  Metadata lines start with ``#``.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import math
from collections.abc import Iterable, Mapping, Sequence
from pathlib import Path

import numpy as np


def format_number(value) -> str:
    """Shortest round-trip text for a scalar; NaN becomes ``""``."""
    if isinstance(value, (bool, np.bool_)):
        return "1" if value else "0"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, str):
        return value
    v = float(value)
    if math.isnan(v):
        return ""
    if math.isinf(v):
        return "inf" if v > 0 else "-inf"
    text = repr(v)
    if text.endswith(".0"):
        text = text[:-2]
    return text


def parse_number(text: str) -> float:
    return float("nan") if text == "" else float(text)


def render_csv(header: Sequence[str], rows: Iterable[Sequence], meta: Mapping | None = None) -> str:
    buf = io.StringIO()
    for key, val in (meta or {}).items():
        buf.write(f"# {key}: {val}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(list(header))
    width = len(header)
    for row in rows:
        if len(row) != width:
            raise ValueError(f"row has {len(row)} fields, header has {width}")
        writer.writerow([format_number(v) for v in row])
    return buf.getvalue()


def write_csv(path: str | Path, header: Sequence[str], rows: Iterable[Sequence],
              meta: Mapping | None = None) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(render_csv(header, rows, meta))
    return path


def read_csv(path: str | Path) -> tuple[dict[str, str], list[str], list[list[str]]]:
    """Return ``(meta, header, rows)`` with rows as raw strings."""
    meta: dict[str, str] = {}
    lines = []
    with open(path, encoding="utf-8", newline="") as fh:
        for line in fh:
            if line.startswith("#"):
                key, _, val = line[1:].strip().partition(":")
                meta[key.strip()] = val.strip()
            else:
                lines.append(line)
    reader = csv.reader(lines)
    header = next(reader)
    return meta, header, [row for row in reader]


def read_csv_columns(path: str | Path) -> dict[str, np.ndarray]:
    """Numeric columns keyed by header name (empty fields become NaN)."""
    _, header, rows = read_csv(path)
    cols = {h: np.empty(len(rows)) for h in header}
    for i, row in enumerate(rows):
        for h, cell in zip(header, row):
            cols[h][i] = parse_number(cell)
    return cols


def sha256_file(path: str | Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 16), b""):
            h.update(block)
    return h.hexdigest()


def write_manifest(out_dir: str | Path, content: Mapping, files: Sequence[str | Path]) -> Path:
    """``manifest.json`` with the given content plus a checksum per output file."""
    out_dir = Path(out_dir)
    checks = {Path(f).name: sha256_file(f) for f in sorted(files, key=lambda p: Path(p).name)}
    doc = dict(content)
    doc["files"] = checks
    path = out_dir / "manifest.json"
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True, default=_json_default)
        fh.write("\n")
    return path


def _json_default(obj):
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (tuple, set)):
        return list(obj)
    raise TypeError(f"not JSON serializable: {type(obj).__name__}")

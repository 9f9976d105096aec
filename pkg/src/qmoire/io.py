"""CSV and PGM writers/readers. Every file is written to a temporary sibling
and renamed into place, so a final path never holds a partial file."""
from __future__ import annotations

import os
import tempfile
from pathlib import Path
from typing import Union

import numpy as np

from .classical import PatternImage
from .records import ScanRecord

CSV_HEADER = "step,position_mm,value,expected_rate"
PathLike = Union[str, os.PathLike]


def atomic_write(path: PathLike, payload: Union[str, bytes]) -> Path:
    path = Path(path)
    data = payload.encode("utf-8") if isinstance(payload, str) else payload
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", suffix=".tmp", dir=path.parent)
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        try:
            os.unlink(tmp)
        except FileNotFoundError:
            pass
        raise
    return path


def _fixed(v: float) -> str:
    # + 0.0 folds -0.0 into 0.0
    return f"{float(v) + 0.0:.12f}"


def format_csv(record: ScanRecord) -> str:
    lines = [CSV_HEADER]
    counts = record.kind == "counts"
    for k, x, v, e in zip(record.steps, record.positions, record.values, record.expected_rate):
        value = str(int(v)) if counts else _fixed(v)
        lines.append(f"{int(k)},{_fixed(x)},{value},{_fixed(e)}")
    return "\n".join(lines) + "\n"


def write_csv(record: ScanRecord, path: PathLike) -> Path:
    """Write ``step,position_mm,value,expected_rate`` rows (12 decimals; counts as integers)."""
    return atomic_write(path, format_csv(record))


def read_csv(path: PathLike) -> ScanRecord:
    text = Path(path).read_text(encoding="utf-8")
    lines = text.splitlines()
    if not lines or lines[0].strip() != CSV_HEADER:
        raise ValueError(f"{path}: expected header {CSV_HEADER!r}")
    steps, pos, vals, exp = [], [], [], []
    is_counts = True
    for n, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        fields = line.split(",")
        if len(fields) != 4:
            raise ValueError(f"{path}:{n}: expected 4 fields, got {len(fields)}")
        steps.append(int(fields[0]))
        pos.append(float(fields[1]))
        is_counts &= "." not in fields[2] and "e" not in fields[2].lower()
        vals.append(float(fields[2]))
        exp.append(float(fields[3]))
    kind = "counts" if is_counts and vals else "analytic_rate"
    values = np.array(vals, dtype=np.int64 if kind == "counts" else float)
    return ScanRecord(np.array(pos), values, kind, np.array(exp), np.array(steps))


def pgm_bytes(image: PatternImage) -> bytes:
    header = f"P5\n{image.width} {image.height}\n255\n".encode("ascii")
    payload = np.floor(image.pixels * 255 + 0.5).astype(np.uint8)
    return header + payload.tobytes(order="C")


def write_pgm(image: PatternImage, path: PathLike) -> Path:
    """Binary 8-bit PGM, row-major, pixel value round(I * 255)."""
    return atomic_write(path, pgm_bytes(image))


def read_pgm(path: PathLike, pitch: float = 1.0, origin=(0.0, 0.0)) -> PatternImage:
    """Load an 8-bit binary PGM; PGM carries no geometry, so pass ``pitch``/``origin``."""
    data = Path(path).read_bytes()
    tokens = []
    pos = 0
    while len(tokens) < 4:
        while data[pos : pos + 1].isspace():
            pos += 1
        if data[pos : pos + 1] == b"#":
            pos = data.index(b"\n", pos) + 1
            continue
        start = pos
        while not data[pos : pos + 1].isspace():
            pos += 1
        tokens.append(data[start:pos].decode("ascii"))
    pos += 1
    magic, width, height, maxval = tokens[0], int(tokens[1]), int(tokens[2]), int(tokens[3])
    if magic != "P5" or maxval != 255:
        raise ValueError(f"{path}: only 8-bit binary PGM (P5, maxval 255) is supported")
    raw = np.frombuffer(data, dtype=np.uint8, count=width * height, offset=pos)
    return PatternImage(width, height, pitch, raw.reshape(height, width) / 255.0, tuple(origin))

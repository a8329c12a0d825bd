"""File output: CSV reports, an SVG phase-diagram heatmap, and PGM images.

CSV headers are fixed:

* phase grid: ``s_x,s_y,success_rate,delta``
* statistical dimension: ``cone,d,samples,mean,stderr``
* DOA: ``method,theta_true,theta_est,error_deg``

Floats are written with 17 significant digits so they round-trip exactly.
"""
from __future__ import annotations

import csv
import os
from dataclasses import dataclass

import numpy as np

from .exceptions import ImageFormatError, UnsupportedFormatError

__all__ = [
    "PHASE_HEADER",
    "SDIM_HEADER",
    "DOA_HEADER",
    "SdimRecord",
    "format_float",
    "write_rows",
    "write_csv",
    "write_svg_heatmap",
    "read_pgm",
    "write_pgm",
    "to_gray",
]

PHASE_HEADER = ("s_x", "s_y", "success_rate", "delta")
SDIM_HEADER = ("cone", "d", "samples", "mean", "stderr")
DOA_HEADER = ("method", "theta_true", "theta_est", "error_deg")


@dataclass(frozen=True)
class SdimRecord:
    """One row of the statistical-dimension report."""

    cone: str
    d: int
    samples: int
    mean: float
    stderr: float


def format_float(value):
    if isinstance(value, (bool, np.bool_)):
        return str(int(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return f"{float(value):.17g}"
    return str(value)


def write_rows(path, header, rows):
    try:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(header)
            for row in rows:
                writer.writerow([format_float(v) for v in row])
    except OSError as exc:
        raise OSError(exc.errno, f"cannot write {path}: {exc.strerror}") from exc


def write_csv(result, path):
    """Write ``result`` with the schema matching its type.

    Accepts a phase-diagram result, an :class:`SdimRecord` (or a list of
    them) and a DOA report.
    """
    # local imports: experiments imports this module
    from .experiments.doa import DoaReport
    from .experiments.phase import PhaseGridResult

    if isinstance(result, PhaseGridResult):
        rows = [
            (cell.s_x, cell.s_y, cell.success_rate, cell.delta) for cell in result.cells
        ]
        return write_rows(path, PHASE_HEADER, rows)
    if isinstance(result, SdimRecord):
        result = [result]
    if isinstance(result, list) and all(isinstance(r, SdimRecord) for r in result):
        rows = [(r.cone, r.d, r.samples, r.mean, r.stderr) for r in result]
        return write_rows(path, SDIM_HEADER, rows)
    if isinstance(result, DoaReport):
        return write_rows(path, DOA_HEADER, result.rows())
    raise TypeError(f"no CSV schema for {type(result).__name__}")


def write_svg_heatmap(grid, path, cell_size=20):
    """Render a phase diagram as SVG.

    One ``rect`` per cell, gray level proportional to the success rate
    (white = always succeeds), with the ``delta = 1`` level curve drawn as a
    polyline on top.
    """
    xs, ys, rates, deltas = grid.as_arrays()
    nx, ny = len(xs), len(ys)
    width, height = nx * cell_size, ny * cell_size
    parts = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">',
    ]
    for i in range(nx):
        for j in range(ny):
            rate = rates[i, j]
            level = 0 if np.isnan(rate) else int(round(255 * float(rate)))
            # s_x runs left to right, s_y bottom to top
            px, py = i * cell_size, (ny - 1 - j) * cell_size
            parts.append(
                f'<rect x="{px}" y="{py}" width="{cell_size}" height="{cell_size}" '
                f'fill="rgb({level},{level},{level})"/>'
            )
    for line in grid.level_curve(deltas, 1.0):
        points = " ".join(
            f"{(fi + 0.5) * cell_size:.3f},{(ny - 0.5 - fj) * cell_size:.3f}" for fi, fj in line
        )
        parts.append(f'<polyline points="{points}" fill="none" stroke="#e6c300" stroke-width="2"/>')
    parts.append("</svg>")
    try:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("\n".join(parts) + "\n")
    except OSError as exc:
        raise OSError(exc.errno, f"cannot write {path}: {exc.strerror}") from exc


def to_gray(image, lo=None, hi=None):
    """Affinely map a float image to 0..255 ``uint8`` (constant images map to 0)."""
    image = np.asarray(image, dtype=float)
    lo = float(image.min()) if lo is None else lo
    hi = float(image.max()) if hi is None else hi
    if hi <= lo:
        return np.zeros(image.shape, dtype=np.uint8)
    scaled = np.clip((image - lo) / (hi - lo), 0.0, 1.0)
    return np.round(255 * scaled).astype(np.uint8)


def write_pgm(path, pixels):
    """Write a binary (P5) PGM with maxval 255, rows in order."""
    pixels = np.asarray(pixels)
    if pixels.ndim != 2:
        raise ValueError("PGM images are two-dimensional")
    if pixels.dtype != np.uint8:
        if pixels.min() < 0 or pixels.max() > 255:
            raise ValueError("pixel values must lie in 0..255")
        pixels = pixels.astype(np.uint8)
    rows, cols = pixels.shape
    header = f"P5\n{cols} {rows}\n255\n".encode("ascii")
    try:
        with open(path, "wb") as fh:
            fh.write(header)
            fh.write(np.ascontiguousarray(pixels).tobytes())
    except OSError as exc:
        raise OSError(exc.errno, f"cannot write {path}: {exc.strerror}") from exc


class _Header:
    def __init__(self, data, path):
        self.data = data
        self.path = path
        self.pos = 0

    def token(self):
        data = self.data
        while True:
            while self.pos < len(data) and data[self.pos : self.pos + 1].isspace():
                self.pos += 1
            if self.pos < len(data) and data[self.pos : self.pos + 1] == b"#":
                while self.pos < len(data) and data[self.pos : self.pos + 1] not in (b"\n", b"\r"):
                    self.pos += 1
                continue
            break
        start = self.pos
        while self.pos < len(data) and not data[self.pos : self.pos + 1].isspace() and data[
            self.pos : self.pos + 1
        ] != b"#":
            self.pos += 1
        if start == self.pos:
            raise ImageFormatError("unexpected end of header", self.path, start)
        return data[start : self.pos], start

    def integer(self, what):
        tok, offset = self.token()
        try:
            value = int(tok)
        except ValueError:
            raise ImageFormatError(f"bad {what} {tok!r}", self.path, offset) from None
        if value < 0:
            raise ImageFormatError(f"negative {what}", self.path, offset)
        return value, offset


def read_pgm(path):
    """Read a P5 (binary) or P2 (ASCII) PGM with maxval at most 255.

    Returns a ``uint8`` array of shape ``(rows, cols)``.

    Raises
    ------
    ImageFormatError
        Malformed file; the message carries the path and byte offset.
    UnsupportedFormatError
        maxval above 255.
    """
    try:
        with open(path, "rb") as fh:
            data = fh.read()
    except OSError as exc:
        raise ImageFormatError(f"cannot read file ({exc.strerror})", path, 0) from exc
    head = _Header(data, path)
    magic, _ = head.token()
    if magic not in (b"P5", b"P2"):
        raise ImageFormatError(f"not a PGM file (magic {magic!r})", path, 0)
    cols, _ = head.integer("width")
    rows, _ = head.integer("height")
    maxval, offset = head.integer("maxval")
    if maxval == 0:
        raise ImageFormatError("maxval must be positive", path, offset)
    if maxval > 255:
        raise UnsupportedFormatError(f"maxval {maxval} > 255 is not supported", path, offset)
    count = rows * cols
    if magic == b"P5":
        start = head.pos + 1
        body = data[start : start + count]
        if len(body) < count:
            raise ImageFormatError(
                f"pixel data truncated: expected {count} bytes, found {len(body)}",
                path,
                start + len(body),
            )
        pixels = np.frombuffer(body, dtype=np.uint8).copy()
    else:
        values = []
        for _ in range(count):
            if head.pos >= len(data):
                raise ImageFormatError("pixel data truncated", path, head.pos)
            value, off = head.integer("pixel")
            values.append(value)
        pixels = np.asarray(values)
        if pixels.size and pixels.max() > maxval:
            raise ImageFormatError("pixel value exceeds maxval", path, off)
        pixels = pixels.astype(np.uint8)
    if pixels.size and pixels.max() > maxval:
        raise ImageFormatError("pixel value exceeds maxval", path, head.pos)
    return pixels.reshape(rows, cols)

"""Portable map files: binary PGM (P5) raster plus a plain-text sidecar.

Pixel encoding: 0 = occupied (p > 0.65), 254 = free (p < 0.196),
205 = unknown. Image row 0 is the top (max-y) row of the grid. The
sidecar carries image, resolution, origin [x, y, theta],
occupied_thresh and free_thresh, one `key: value` per line.

Loading reconstructs a trinary grid with log-odds +8 / -8 / 0.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from mazeslam.errors import InputFileError
from mazeslam.geometry import Pose2
from mazeslam.grid import FREE_THRESH, L_CLAMP, OCC_THRESH, OccupancyGrid

PIXEL_OCC = 0
PIXEL_FREE = 254
PIXEL_UNKNOWN = 205


def _paths(path) -> tuple[Path, Path]:
    p = Path(path)
    if p.suffix == ".pgm":
        return p, p.with_suffix(".yaml")
    if p.suffix == ".yaml":
        return p.with_suffix(".pgm"), p
    return p.with_suffix(".pgm"), p.with_suffix(".yaml")


def save_map(grid: OccupancyGrid, path) -> Path:
    """Write ``<path>.pgm`` and ``<path>.yaml``; returns the PGM path."""
    pgm_path, meta_path = _paths(path)
    tri = grid.trinary()
    pixels = np.full(tri.shape, PIXEL_UNKNOWN, dtype=np.uint8)
    pixels[tri == 1] = PIXEL_OCC
    pixels[tri == 0] = PIXEL_FREE
    pixels = np.flipud(pixels)  # image row 0 = max-y grid row
    header = f"P5\n{grid.width} {grid.height}\n255\n".encode("ascii")
    pgm_path.parent.mkdir(parents=True, exist_ok=True)
    pgm_path.write_bytes(header + pixels.tobytes())
    meta = (
        f"image: {pgm_path.name}\n"
        f"resolution: {grid.resolution!r}\n"
        f"origin: [{grid.origin.x!r}, {grid.origin.y!r}, {grid.origin.theta!r}]\n"
        f"occupied_thresh: {OCC_THRESH!r}\n"
        f"free_thresh: {FREE_THRESH!r}\n"
    )
    meta_path.write_text(meta)
    return pgm_path


def _parse_pgm(data: bytes, path: Path) -> np.ndarray:
    pos = 0

    def token() -> bytes:
        nonlocal pos
        while pos < len(data):
            if data[pos : pos + 1].isspace():
                pos += 1
            elif data[pos : pos + 1] == b"#":
                while pos < len(data) and data[pos : pos + 1] != b"\n":
                    pos += 1
            else:
                break
        start = pos
        while pos < len(data) and not data[pos : pos + 1].isspace():
            pos += 1
        if start == pos:
            raise InputFileError(f"{path}: truncated PGM header")
        return data[start:pos]

    if token() != b"P5":
        raise InputFileError(f"{path}: not a binary PGM (P5) file")
    try:
        width = int(token())
        height = int(token())
        maxval = int(token())
    except ValueError as exc:
        raise InputFileError(f"{path}: malformed PGM header") from exc
    if maxval != 255:
        raise InputFileError(f"{path}: unsupported maxval {maxval}")
    pos += 1  # single whitespace byte after maxval
    raster = data[pos:]
    if len(raster) != width * height:
        raise InputFileError(
            f"{path}: expected {width * height} pixel bytes, found {len(raster)}"
        )
    return np.frombuffer(raster, dtype=np.uint8).reshape(height, width)


def _parse_sidecar(meta_path: Path) -> dict:
    try:
        text = meta_path.read_text()
    except OSError as exc:
        raise InputFileError(f"cannot read map sidecar {meta_path}: {exc}") from exc
    fields: dict = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if ":" not in line:
            raise InputFileError(f"{meta_path}:{lineno}: expected `key: value`")
        key, value = line.split(":", 1)
        fields[key.strip()] = value.strip()
    for required in ("image", "resolution", "origin"):
        if required not in fields:
            raise InputFileError(f"{meta_path}: missing key {required!r}")
    return fields


def load_map(path) -> OccupancyGrid:
    pgm_path, meta_path = _paths(path)
    fields = _parse_sidecar(meta_path)
    pgm_file = meta_path.parent / fields["image"]
    if pgm_file != pgm_path and not pgm_file.exists():
        pgm_file = pgm_path
    try:
        data = pgm_file.read_bytes()
    except OSError as exc:
        raise InputFileError(f"cannot read map image {pgm_file}: {exc}") from exc
    pixels = _parse_pgm(data, pgm_file)
    try:
        resolution = float(fields["resolution"])
        origin_vals = [float(v) for v in fields["origin"].strip("[]").split(",")]
        if len(origin_vals) != 3:
            raise ValueError("origin needs 3 values")
    except ValueError as exc:
        raise InputFileError(f"{meta_path}: malformed metadata: {exc}") from exc
    if origin_vals[2] != 0.0:
        raise InputFileError(f"{meta_path}: rotated maps are not supported")
    known = np.isin(pixels, (PIXEL_OCC, PIXEL_FREE, PIXEL_UNKNOWN))
    if not known.all():
        bad = int(pixels[~known][0])
        raise InputFileError(f"{pgm_file}: unknown pixel value {bad}")
    cells = np.zeros(pixels.shape)
    cells[pixels == PIXEL_OCC] = L_CLAMP
    cells[pixels == PIXEL_FREE] = -L_CLAMP
    cells = np.flipud(cells).copy()
    return OccupancyGrid(resolution, Pose2(origin_vals[0], origin_vals[1], 0.0), cells)

"""Sensor log (JSONL), trajectory CSV, and drive-script file handling.

A sensor log holds one JSON object per line with a non-decreasing "t"
and a "type" of scan | imu | odom | gt | cmd. Trajectories are CSV with
header t,x,y,theta. Drive scripts are JSON lists of
{"dur": seconds, "v": m/s, "w": rad/s} segments.
"""

from __future__ import annotations

import csv
import json
import math
from pathlib import Path
from typing import Iterable

import numpy as np

from mazeslam.errors import InputFileError
from mazeslam.sensors import LidarScan

RECORD_KEYS = {
    "scan": ("angle_min", "angle_inc", "n", "ranges"),
    "imu": ("gyro_z",),
    "odom": ("v", "w"),
    "gt": ("x", "y", "theta"),
    "cmd": ("v", "w"),
}


def write_log(records: Iterable[dict], path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w") as fh:
        for rec in records:
            fh.write(json.dumps(rec))
            fh.write("\n")


def read_log(path) -> list[dict]:
    """Parse and validate a sensor log; raises InputFileError with the
    offending line number on any malformed, unknown, or non-monotone record."""
    path = Path(path)
    try:
        lines = path.read_text().splitlines()
    except OSError as exc:
        raise InputFileError(f"cannot read log {path}: {exc}") from exc
    records: list[dict] = []
    last_t = -math.inf
    for lineno, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        try:
            rec = json.loads(line)
        except json.JSONDecodeError as exc:
            raise InputFileError(f"{path}:{lineno}: invalid JSON: {exc}") from exc
        if not isinstance(rec, dict) or "t" not in rec or "type" not in rec:
            raise InputFileError(f"{path}:{lineno}: record needs 't' and 'type'")
        kind = rec["type"]
        if kind not in RECORD_KEYS:
            raise InputFileError(f"{path}:{lineno}: unknown record type {kind!r}")
        missing = [k for k in RECORD_KEYS[kind] if k not in rec]
        if missing:
            raise InputFileError(f"{path}:{lineno}: {kind} record missing {missing}")
        t = float(rec["t"])
        if t < last_t - 1e-9:
            raise InputFileError(
                f"{path}:{lineno}: non-monotone timestamp {t} after {last_t}"
            )
        last_t = t
        if kind == "scan" and len(rec["ranges"]) != rec["n"]:
            raise InputFileError(f"{path}:{lineno}: scan has {len(rec['ranges'])} of {rec['n']} ranges")
        records.append(rec)
    return records


def scan_from_record(rec: dict) -> LidarScan:
    n = int(rec["n"])
    angles = rec["angle_min"] + rec["angle_inc"] * np.arange(n)
    return LidarScan(stamp=float(rec["t"]), angles=angles, ranges=np.asarray(rec["ranges"], dtype=float))


def write_trajectory(rows: Iterable[tuple[float, float, float, float]], path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["t", "x", "y", "theta"])
        for row in rows:
            writer.writerow([repr(float(v)) for v in row])


def read_trajectory(path) -> np.ndarray:
    """Load a t,x,y,theta CSV as an (N, 4) array."""
    path = Path(path)
    try:
        with path.open() as fh:
            reader = csv.reader(fh)
            header = next(reader, None)
            if header != ["t", "x", "y", "theta"]:
                raise InputFileError(f"{path}: expected header t,x,y,theta")
            rows = [[float(v) for v in row] for row in reader if row]
    except OSError as exc:
        raise InputFileError(f"cannot read trajectory {path}: {exc}") from exc
    except ValueError as exc:
        raise InputFileError(f"{path}: non-numeric trajectory row: {exc}") from exc
    return np.asarray(rows, dtype=float).reshape(-1, 4)


def write_error_csv(rows: Iterable[tuple[float, float, float]], path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["stamp", "pos_err_m", "heading_err_rad"])
        for row in rows:
            writer.writerow([repr(float(v)) for v in row])


def gt_trajectory(records: list[dict]) -> np.ndarray:
    """Extract the ground-truth trajectory from log records as (N, 4)."""
    rows = [
        (rec["t"], rec["x"], rec["y"], rec["theta"]) for rec in records if rec["type"] == "gt"
    ]
    return np.asarray(rows, dtype=float).reshape(-1, 4)


def read_script(path) -> list[tuple[float, float, float]]:
    """Load a drive script: list of (duration, v, w) segments."""
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise InputFileError(f"cannot read drive script {path}: {exc}") from exc
    if not isinstance(doc, list):
        raise InputFileError(f"{path}: drive script must be a JSON list")
    out = []
    for idx, seg in enumerate(doc):
        try:
            dur = float(seg["dur"])
            v = float(seg.get("v", 0.0))
            w = float(seg.get("w", 0.0))
        except (KeyError, TypeError, ValueError) as exc:
            raise InputFileError(f"{path}: segment {idx} malformed: {exc}") from exc
        if dur <= 0:
            raise InputFileError(f"{path}: segment {idx} has non-positive duration")
        out.append((dur, v, w))
    return out

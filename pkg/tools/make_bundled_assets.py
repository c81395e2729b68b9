#!/usr/bin/env python3
"""Regenerate the bundled maze world and its scripted drive tour.

The maze is three concentric square rings inside an 8x8 m box, every
corridor 0.8 m wide, with 0.8 m gaps staggered between rings. The tour
follows corridor centerlines through all rings into the central plaza;
leg speeds are adjusted so every leg is a whole number of 0.05 s steps
and waypoints are hit exactly.
"""

import json
import math
from pathlib import Path

DT = 0.05
CRUISE_V = 0.3
TURN_W = math.pi / 4

DATA = Path(__file__).resolve().parent.parent / "src" / "mazeslam" / "data"


def world_doc() -> dict:
    segs = [
        # outer box
        (0, 0, 8, 0),
        (8, 0, 8, 8),
        (8, 8, 0, 8),
        (0, 8, 0, 0),
        # ring 1 (0.8..7.2), gap at bottom x in [3.6, 4.4]
        (0.8, 0.8, 3.6, 0.8),
        (4.4, 0.8, 7.2, 0.8),
        (7.2, 0.8, 7.2, 7.2),
        (7.2, 7.2, 0.8, 7.2),
        (0.8, 7.2, 0.8, 0.8),
        # ring 2 (1.6..6.4), gap at top x in [3.6, 4.4]
        (1.6, 1.6, 6.4, 1.6),
        (6.4, 1.6, 6.4, 6.4),
        (6.4, 6.4, 4.4, 6.4),
        (3.6, 6.4, 1.6, 6.4),
        (1.6, 6.4, 1.6, 1.6),
        # ring 3 (2.4..5.6), gap at bottom x in [3.6, 4.4]
        (2.4, 2.4, 3.6, 2.4),
        (4.4, 2.4, 5.6, 2.4),
        (5.6, 2.4, 5.6, 5.6),
        (5.6, 5.6, 2.4, 5.6),
        (2.4, 5.6, 2.4, 2.4),
    ]
    return {
        "bounds": [-0.2, -0.2, 8.2, 8.2],
        "spawn": [0.4, 0.4, math.pi / 2],
        "segments": [list(map(float, s)) for s in segs],
    }


TOUR = [
    (0.4, 0.4),
    (0.4, 7.6),
    (7.6, 7.6),
    (7.6, 0.4),
    (4.0, 0.4),  # outer lap, stop under the ring-1 gap
    (4.0, 1.2),  # through ring-1 gap
    (1.2, 1.2),
    (1.2, 6.8),
    (4.0, 6.8),  # ring-1/2 corridor, stop over the ring-2 gap
    (4.0, 6.0),  # through ring-2 gap
    (2.0, 6.0),
    (2.0, 2.0),
    (6.0, 2.0),
    (6.0, 6.0),  # ring-2/3 corridor lap
    (6.0, 2.0),
    (4.0, 2.0),  # back to the ring-3 gap
    (4.0, 4.0),  # into the plaza center
]


def tour_script() -> list[dict]:
    segments: list[dict] = []
    heading = math.pi / 2  # spawn heading

    def turn_to(target: float):
        nonlocal heading
        delta = math.atan2(math.sin(target - heading), math.cos(target - heading))
        if abs(delta) < 1e-12:
            return
        steps = max(1, round(abs(delta) / (TURN_W * DT)))
        w = delta / (steps * DT)
        segments.append({"dur": steps * DT, "v": 0.0, "w": w})
        heading = target

    for (x0, y0), (x1, y1) in zip(TOUR, TOUR[1:]):
        length = math.hypot(x1 - x0, y1 - y0)
        turn_to(math.atan2(y1 - y0, x1 - x0))
        steps = max(1, round(length / (CRUISE_V * DT)))
        v = length / (steps * DT)
        segments.append({"dur": steps * DT, "v": v, "w": 0.0})
    return segments


def main():
    DATA.mkdir(parents=True, exist_ok=True)
    (DATA / "maze8.json").write_text(json.dumps(world_doc(), indent=1) + "\n")
    (DATA / "maze8_tour.json").write_text(json.dumps(tour_script(), indent=1) + "\n")
    total = sum(seg["dur"] for seg in tour_script())
    print(f"wrote maze8.json and maze8_tour.json (tour {total:.1f} s of sim time)")


if __name__ == "__main__":
    main()

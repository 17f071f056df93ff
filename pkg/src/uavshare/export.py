"""Result export: per-point CSV, binary PGM raster, JSON summaries, trial tables.

File layouts (stable, byte-for-byte reproducible):

* map CSV -- header ``x,y,pass,worst_margin_db,binding_condition``; one row
  per grid point, south row first, west to east within a row; ``x``/``y``
  with 3 decimals, ``pass`` as 0/1, margin with 6 decimals, binding
  condition as ``uplink``/``downlink``/``terrestrial``.
* raster -- binary PGM (P5), one pixel per grid point, north row first;
  255 = flyable, failing points shaded by binding condition
  (uplink 0, downlink 85, terrestrial 170).
* JSON -- ``json.dumps(..., sort_keys=True, indent=2)`` plus a newline.
* trials CSV -- ``trial`` then the record's value columns in insertion order,
  floats with ``repr`` precision.
"""
from __future__ import annotations

import csv
import io
import json
from pathlib import Path
from typing import Any

import numpy as np

from .coverage import FlyableGrid
from .link import Condition

CSV_HEADER = ("x", "y", "pass", "worst_margin_db", "binding_condition")
PASS_SHADE = 255
FAIL_SHADES = {Condition.UPLINK: 0, Condition.DOWNLINK: 85, Condition.TERRESTRIAL: 170}
_NAMES = {c.value: c.name.lower() for c in Condition}
_CODES = {v: k for k, v in _NAMES.items()}


def _write(path: Path, data: bytes) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(data)
    return path


def grid_csv_bytes(grid: FlyableGrid) -> bytes:
    X, Y = grid.spec.mesh()
    buf = io.StringIO()
    buf.write(",".join(CSV_HEADER) + "\n")
    for x, y, ok, margin, b in zip(X.ravel(), Y.ravel(), grid.passed.ravel(),
                                   grid.worst_margin.ravel(), grid.binding.ravel()):
        buf.write(f"{x:.3f},{y:.3f},{int(ok)},{margin:.6f},{_NAMES[int(b)]}\n")
    return buf.getvalue().encode("ascii")


def write_grid_csv(grid: FlyableGrid, path) -> Path:
    return _write(path, grid_csv_bytes(grid))


def raster_bytes(passed: np.ndarray, binding: np.ndarray) -> bytes:
    """P5 image for (ny, nx) arrays whose row 0 is the southern edge."""
    shade = np.full(passed.shape, PASS_SHADE, dtype=np.uint8)
    for cond, value in FAIL_SHADES.items():
        shade[~passed & (binding == cond.value)] = value
    ny, nx = passed.shape
    return f"P5\n{nx} {ny}\n255\n".encode("ascii") + np.flipud(shade).tobytes()


def write_raster(grid: FlyableGrid, path) -> Path:
    return _write(path, raster_bytes(grid.passed, grid.binding))


def read_grid_csv(path) -> dict[str, np.ndarray]:
    """Parse a map CSV back into (ny, nx) arrays plus the x/y axes."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = tuple(next(reader))
        if header != CSV_HEADER:
            raise ValueError(f"{path}: unexpected header {header}")
        rows = list(reader)
    if not rows:
        raise ValueError(f"{path}: no data rows")
    x = np.array([float(r[0]) for r in rows])
    y = np.array([float(r[1]) for r in rows])
    xs, ys = np.unique(x), np.unique(y)
    shape = (len(ys), len(xs))
    if len(rows) != shape[0] * shape[1]:
        raise ValueError(f"{path}: {len(rows)} rows do not form a {shape} grid")
    try:
        binding = np.array([_CODES[r[4]] for r in rows], dtype=np.int8)
    except KeyError as exc:
        raise ValueError(f"{path}: unknown binding condition {exc}") from None
    return {
        "xs": xs, "ys": ys,
        "passed": np.array([r[2] == "1" for r in rows]).reshape(shape),
        "worst_margin": np.array([float(r[3]) for r in rows]).reshape(shape),
        "binding": binding.reshape(shape),
    }


def render_csv(csv_path, raster_path) -> Path:
    """Rebuild the raster from a map CSV, without recomputing anything."""
    data = read_grid_csv(csv_path)
    return _write(raster_path, raster_bytes(data["passed"], data["binding"]))


def json_bytes(obj: Any) -> bytes:
    return (json.dumps(obj, sort_keys=True, indent=2) + "\n").encode("utf-8")


def write_json(obj: Any, path) -> Path:
    return _write(path, json_bytes(obj))


def grid_summary(grid: FlyableGrid) -> dict:
    counts = {_NAMES[c.value]: int(np.count_nonzero(~grid.passed & (grid.binding == c.value)))
              for c in Condition}
    return {
        "flyable_ratio": grid.flyable_ratio,
        "points": int(grid.passed.size),
        "flyable_points": grid.pass_count,
        "failing_by_condition": counts,
        "clamped_points": int(np.count_nonzero(grid.clamped)),
        "gs_position": {"x": grid.gs_position.x, "y": grid.gs_position.y,
                        "z": grid.gs_position.z},
        "grid": {"resolution_m": grid.spec.resolution, "altitude_m": grid.spec.altitude,
                 "nx": grid.spec.shape[1], "ny": grid.spec.shape[0]},
        "channels": list(grid.channels) if grid.channels else None,
    }


def plan_summary(plan) -> dict:
    from .planner import cross_subarea_channel_check

    return {
        "combined_ratio": plan.combined_ratio,
        "warning": plan.warning,
        "infeasible_sub_areas": list(plan.infeasible),
        "sub_areas": [
            {"index": sa.index, "strategy": sa.strategy.value,
             "polygon": [list(p) for p in sa.polygon],
             "uplink": sa.uplink, "downlink": sa.downlink, "flyable_ratio": r}
            for sa, r in zip(plan.sub_areas, plan.sub_ratios)
        ],
        "channel_conflicts": [
            {"sub_areas": [c.first, c.second], "link": c.link, "channel": c.channel}
            for c in cross_subarea_channel_check(plan)
        ],
    }


def trials_csv_bytes(result) -> bytes:
    buf = io.StringIO()
    cols = result.columns
    buf.write(",".join(["trial"] + cols) + "\n")
    for rec in result.records:
        buf.write(",".join([str(rec.trial)] + [repr(float(rec.values[c])) for c in cols]) + "\n")
    return buf.getvalue().encode("ascii")


def write_trials_csv(result, path) -> Path:
    return _write(path, trials_csv_bytes(result))

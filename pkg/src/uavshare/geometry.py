"""Flat-earth Cartesian geometry for node placement and beam pointing.

Coordinates are meters: x east, y north, z height above ground.
Angles are degrees.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


class GeometryError(ValueError):
    """Raised for degenerate geometry, e.g. a zero-length pointing vector."""


@dataclass(frozen=True)
class Position3D:
    x: float
    y: float
    z: float = 0.0

    def __post_init__(self):
        for name in ("x", "y", "z"):
            if not math.isfinite(getattr(self, name)):
                raise GeometryError(f"{name} must be finite, got {getattr(self, name)!r}")
        if self.z < 0:
            raise GeometryError(f"z must be >= 0, got {self.z}")

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.z], dtype=float)

    def with_z(self, z: float) -> "Position3D":
        return Position3D(self.x, self.y, z)


@dataclass(frozen=True)
class AreaBounds:
    x_min: float
    x_max: float
    y_min: float
    y_max: float

    def __post_init__(self):
        if not (self.x_min < self.x_max and self.y_min < self.y_max):
            raise GeometryError(f"empty bounds: {self}")

    @property
    def width(self) -> float:
        return self.x_max - self.x_min

    @property
    def height(self) -> float:
        return self.y_max - self.y_min

    @property
    def area(self) -> float:
        return self.width * self.height

    @property
    def center(self) -> tuple[float, float]:
        return (0.5 * (self.x_min + self.x_max), 0.5 * (self.y_min + self.y_max))

    def contains_xy(self, x: float, y: float) -> bool:
        return self.x_min <= x <= self.x_max and self.y_min <= y <= self.y_max

    def corners(self) -> list[tuple[float, float]]:
        """Counter-clockwise from the south-west corner."""
        return [
            (self.x_min, self.y_min),
            (self.x_max, self.y_min),
            (self.x_max, self.y_max),
            (self.x_min, self.y_max),
        ]


def distance(a: Position3D, b: Position3D) -> float:
    return math.sqrt((a.x - b.x) ** 2 + (a.y - b.y) ** 2 + (a.z - b.z) ** 2)


def off_boresight_angle(antenna_pos: Position3D, boresight_target: Position3D,
                        other: Position3D) -> float:
    """Angle in degrees between the boresight direction and the direction to `other`.

    The boresight is the vector from `antenna_pos` to `boresight_target`.
    """
    u = (boresight_target.x - antenna_pos.x, boresight_target.y - antenna_pos.y,
         boresight_target.z - antenna_pos.z)
    v = (other.x - antenna_pos.x, other.y - antenna_pos.y, other.z - antenna_pos.z)
    nu = math.sqrt(u[0] ** 2 + u[1] ** 2 + u[2] ** 2)
    nv = math.sqrt(v[0] ** 2 + v[1] ** 2 + v[2] ** 2)
    if nu == 0.0:
        raise GeometryError("boresight target coincides with antenna position")
    if nv == 0.0:
        raise GeometryError("other point coincides with antenna position")
    # atan2 of |u x v| and u . v stays accurate near 0 and 180 degrees.
    cx = u[1] * v[2] - u[2] * v[1]
    cy = u[2] * v[0] - u[0] * v[2]
    cz = u[0] * v[1] - u[1] * v[0]
    dot = u[0] * v[0] + u[1] * v[1] + u[2] * v[2]
    return math.degrees(math.atan2(math.sqrt(cx * cx + cy * cy + cz * cz), dot))


def pairwise_distance(points: np.ndarray, ref: np.ndarray) -> np.ndarray:
    """Distances from each row of `points` (..., 3) to the single point `ref` (3,)."""
    diff = points - ref
    return np.sqrt(np.einsum("...i,...i->...", diff, diff))


def angle_between(u: np.ndarray, v: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized angle (degrees) between direction vectors `u` and `v`, shape (..., 3).

    Returns ``(angle, degenerate)`` where `degenerate` marks rows with a
    zero-length vector; those rows get angle 0 (main-lobe, worst case).
    """
    nu = np.sqrt(np.einsum("...i,...i->...", u, u))
    nv = np.sqrt(np.einsum("...i,...i->...", v, v))
    denom = nu * nv
    degenerate = denom == 0.0
    safe = np.where(degenerate, 1.0, denom)
    cos_t = np.einsum("...i,...i->...", u, v) / safe
    cos_t = np.where(degenerate, 1.0, np.clip(cos_t, -1.0, 1.0))
    return np.degrees(np.arccos(cos_t)), degenerate

"""Vectors, obstacle primitives and point/obstacle distance queries.

Vectors are plain ``numpy`` arrays of shape ``(3,)``; batches of points are
``(N, 3)`` arrays. All obstacle queries accept either.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np

from .errors import InvalidParams

Vec3 = np.ndarray

GROUND_NAME = "ground"


def vec3(x, y=None, z=None) -> Vec3:
    """Build a finite float vector from three scalars or a length-3 sequence."""
    if y is None and z is None:
        v = np.array(x, dtype=float).reshape(-1)
    else:
        v = np.array([x, y, z], dtype=float)
    if v.shape != (3,):
        raise InvalidParams(f"expected 3 components, got shape {v.shape}")
    if not np.all(np.isfinite(v)):
        raise InvalidParams(f"non-finite vector {v}")
    return v


def norm(v: Vec3) -> float:
    return float(np.sqrt(np.dot(v, v)))


def distance(a: Vec3, b: Vec3) -> float:
    d = np.asarray(a, dtype=float) - np.asarray(b, dtype=float)
    return float(np.sqrt(np.dot(d, d)))


def clamp_norm(v: Vec3, limit: float) -> Vec3:
    """Scale ``v`` down so that its norm does not exceed ``limit``."""
    n = norm(v)
    if n > limit:
        return v * (limit / n)
    return v


@dataclass(frozen=True)
class Obstacle:
    friction_coeff: float = 0.5
    name: str = ""

    @property
    def is_ground(self) -> bool:
        return self.name == GROUND_NAME

    def signed_distance(self, points: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def surface_normal(self, points: np.ndarray) -> np.ndarray:
        raise NotImplementedError


@dataclass(frozen=True)
class Sphere(Obstacle):
    center: Tuple[float, float, float] = (0.0, 0.0, 0.0)
    radius: float = 1.0

    def __post_init__(self):
        if not self.radius > 0:
            raise InvalidParams(f"sphere radius must be > 0, got {self.radius}")
        if self.friction_coeff < 0:
            raise InvalidParams("friction_coeff must be >= 0")
        object.__setattr__(self, "center", tuple(float(c) for c in vec3(self.center)))

    def signed_distance(self, points):
        d = np.asarray(points, dtype=float) - np.asarray(self.center)
        return np.sqrt(np.sum(d * d, axis=-1)) - self.radius

    def surface_normal(self, points):
        d = np.asarray(points, dtype=float) - np.asarray(self.center)
        n = np.sqrt(np.sum(d * d, axis=-1, keepdims=True))
        # A point at the exact center has no preferred direction; push it up.
        safe = np.where(n > 1e-15, n, 1.0)
        out = d / safe
        if np.ndim(out) == 1:
            return out if n[0] > 1e-15 else np.array([0.0, 0.0, 1.0])
        out[n[:, 0] <= 1e-15] = (0.0, 0.0, 1.0)
        return out


@dataclass(frozen=True)
class Box(Obstacle):
    """Axis-aligned box given by its two extreme corners."""

    min_corner: Tuple[float, float, float] = (-0.5, -0.5, -0.5)
    max_corner: Tuple[float, float, float] = (0.5, 0.5, 0.5)

    def __post_init__(self):
        lo, hi = vec3(self.min_corner), vec3(self.max_corner)
        if not np.all(lo < hi):
            raise InvalidParams(f"box min_corner {lo} must be < max_corner {hi}")
        if self.friction_coeff < 0:
            raise InvalidParams("friction_coeff must be >= 0")
        object.__setattr__(self, "min_corner", tuple(float(c) for c in lo))
        object.__setattr__(self, "max_corner", tuple(float(c) for c in hi))

    def _local(self, points):
        lo, hi = np.asarray(self.min_corner), np.asarray(self.max_corner)
        center, half = 0.5 * (lo + hi), 0.5 * (hi - lo)
        rel = np.asarray(points, dtype=float) - center
        return rel, np.abs(rel) - half

    def signed_distance(self, points):
        _, q = self._local(points)
        outside = np.sqrt(np.sum(np.maximum(q, 0.0) ** 2, axis=-1))
        inside = np.minimum(np.max(q, axis=-1), 0.0)
        return outside + inside

    def surface_normal(self, points):
        rel, q = self._local(points)
        rel2, q2 = np.atleast_2d(rel), np.atleast_2d(q)
        sign = np.where(rel2 >= 0.0, 1.0, -1.0)
        pos = np.maximum(q2, 0.0)
        out_len = np.sqrt(np.sum(pos * pos, axis=-1, keepdims=True))
        # Outside: direction from the closest surface point. Inside: the face
        # of least penetration.
        outside_n = sign * pos / np.where(out_len > 0, out_len, 1.0)
        axis = np.argmax(q2, axis=-1)
        inside_n = np.zeros_like(q2)
        rows = np.arange(len(q2))
        inside_n[rows, axis] = sign[rows, axis]
        out = np.where(out_len > 0, outside_n, inside_n)
        return out[0] if np.ndim(rel) == 1 else out


def distance_point_obstacle(p: Vec3, o: Obstacle) -> float:
    """Signed distance from ``p`` to the surface of ``o`` (negative inside)."""
    return float(o.signed_distance(np.asarray(p, dtype=float)))


def contact_query(
    p: Vec3, node_radius: float, o: Obstacle
) -> Optional[Tuple[float, Vec3]]:
    """Penetration depth and outward unit normal for a ball of ``node_radius``.

    Returns ``None`` when the ball does not touch the obstacle.
    """
    if not node_radius > 0:
        raise InvalidParams("node_radius must be > 0")
    d = distance_point_obstacle(p, o)
    if d >= node_radius:
        return None
    n = np.asarray(o.surface_normal(np.asarray(p, dtype=float)), dtype=float)
    return node_radius - d, n / norm(n)


def min_distance(points: np.ndarray, obstacles: Sequence[Obstacle], include_ground=False) -> float:
    """Smallest signed distance from any of ``points`` to the obstacle set."""
    best = np.inf
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    for o in obstacles:
        if o.is_ground and not include_ground:
            continue
        best = min(best, float(np.min(o.signed_distance(pts))))
    return best


def ground_box(height=0.0, friction_coeff=0.5, extent=1.0e3, depth=10.0) -> Box:
    """Large flat box whose top face is the ground plane ``z = height``."""
    return Box(
        friction_coeff=friction_coeff,
        name=GROUND_NAME,
        min_corner=(-extent, -extent, height - depth),
        max_corner=(extent, extent, height),
    )

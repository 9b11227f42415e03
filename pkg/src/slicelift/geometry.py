"""Axis-aligned boxes with integer half-open bounds, plus IoU/Dice overlap.

All coordinates are voxel indices with [min, max) semantics, so areas,
volumes and intersections are exact integer counts and every overlap
measure is an exact ratio of integers.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import EmptyInput

__all__ = [
    "Box2D",
    "Box3D",
    "iou_2d",
    "dice_2d",
    "iou_3d",
    "dice_3d",
    "hull_3d",
]


@dataclass(frozen=True)
class Box2D:
    """Scored rectangle bound to one slice index."""

    z: int
    x_min: int
    x_max: int
    y_min: int
    y_max: int
    score: float = 1.0
    class_id: int = 0

    def __post_init__(self):
        if self.x_min >= self.x_max or self.y_min >= self.y_max:
            raise ValueError(
                f"degenerate 2D box: x=[{self.x_min},{self.x_max}) "
                f"y=[{self.y_min},{self.y_max})"
            )
        if not 0.0 <= self.score <= 1.0:
            raise ValueError(f"score {self.score} outside [0,1]")

    @property
    def area(self) -> int:
        return (self.x_max - self.x_min) * (self.y_max - self.y_min)


@dataclass(frozen=True)
class Box3D:
    """Scored axis-aligned cuboid in voxel index space."""

    x_min: int
    x_max: int
    y_min: int
    y_max: int
    z_min: int
    z_max: int
    score: float = 1.0
    class_id: int = 0

    def __post_init__(self):
        if (
            self.x_min >= self.x_max
            or self.y_min >= self.y_max
            or self.z_min >= self.z_max
        ):
            raise ValueError(
                f"degenerate 3D box: x=[{self.x_min},{self.x_max}) "
                f"y=[{self.y_min},{self.y_max}) z=[{self.z_min},{self.z_max})"
            )
        if not 0.0 <= self.score <= 1.0:
            raise ValueError(f"score {self.score} outside [0,1]")

    @property
    def volume(self) -> int:
        return (
            (self.x_max - self.x_min)
            * (self.y_max - self.y_min)
            * (self.z_max - self.z_min)
        )


def _overlap(a_lo: int, a_hi: int, b_lo: int, b_hi: int) -> int:
    return max(0, min(a_hi, b_hi) - max(a_lo, b_lo))


def iou_2d(a: Box2D, b: Box2D) -> float:
    """Planar intersection over union; slice indices are ignored."""
    inter = _overlap(a.x_min, a.x_max, b.x_min, b.x_max) * _overlap(
        a.y_min, a.y_max, b.y_min, b.y_max
    )
    if inter == 0:
        return 0.0
    return inter / (a.area + b.area - inter)


def dice_2d(a: Box2D, b: Box2D) -> float:
    inter = _overlap(a.x_min, a.x_max, b.x_min, b.x_max) * _overlap(
        a.y_min, a.y_max, b.y_min, b.y_max
    )
    return 2 * inter / (a.area + b.area)


def iou_3d(a: Box3D, b: Box3D) -> float:
    inter = (
        _overlap(a.x_min, a.x_max, b.x_min, b.x_max)
        * _overlap(a.y_min, a.y_max, b.y_min, b.y_max)
        * _overlap(a.z_min, a.z_max, b.z_min, b.z_max)
    )
    if inter == 0:
        return 0.0
    return inter / (a.volume + b.volume - inter)


def dice_3d(a: Box3D, b: Box3D) -> float:
    inter = (
        _overlap(a.x_min, a.x_max, b.x_min, b.x_max)
        * _overlap(a.y_min, a.y_max, b.y_min, b.y_max)
        * _overlap(a.z_min, a.z_max, b.z_min, b.z_max)
    )
    return 2 * inter / (a.volume + b.volume)


def hull_3d(boxes: list[Box2D]) -> Box3D:
    """Tight 3D box around a chain of per-slice boxes.

    The z extent covers [min z, max z + 1); the score is the mean member
    score. All members must share one class id.
    """
    if not boxes:
        raise EmptyInput("hull_3d needs at least one box")
    class_ids = {b.class_id for b in boxes}
    if len(class_ids) != 1:
        raise ValueError(f"mixed class ids in hull: {sorted(class_ids)}")
    return Box3D(
        x_min=min(b.x_min for b in boxes),
        x_max=max(b.x_max for b in boxes),
        y_min=min(b.y_min for b in boxes),
        y_max=max(b.y_max for b in boxes),
        z_min=min(b.z for b in boxes),
        z_max=max(b.z for b in boxes) + 1,
        score=sum(b.score for b in boxes) / len(boxes),
        class_id=boxes[0].class_id,
    )

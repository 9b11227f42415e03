"""Interchange format for per-slice 2D detections (one JSON document per scan).

Schema (format_version 1):
    { "format_version": 1, "scan_id": str, "image_dims": [nx, ny],
      "num_slices": nz, "detector_name": str, "preprocessing_tag": str,
      "boxes": [ {"z": int, "x": [min, max], "y": [min, max],
                  "score": float, "class_id": int} ] }

Fractional coordinates are rounded outward (floor min, ceil max) and then
clamped to the image; boxes that become degenerate are dropped with a
logged warning. Parsing preserves box order.
"""

from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path

from .errors import BoundsViolation, EmptyScanId, IoFailure, SchemaViolation
from .geometry import Box2D

__all__ = ["DetectionSet", "parse_detections", "load_detections", "write_detections",
           "DEFAULT_SCORE_THRESHOLD"]

log = logging.getLogger(__name__)

FORMAT_VERSION = 1
DEFAULT_SCORE_THRESHOLD = 0.25


@dataclass(frozen=True)
class DetectionSet:
    scan_id: str
    image_dims: tuple[int, int]
    num_slices: int
    boxes: tuple[Box2D, ...] = ()
    detector_name: str = ""
    preprocessing_tag: str = ""

    def __post_init__(self):
        if not self.scan_id:
            raise EmptyScanId("scan_id must be nonempty")
        nx, ny = self.image_dims
        for b in self.boxes:
            if not (0 <= b.x_min < b.x_max <= nx and 0 <= b.y_min < b.y_max <= ny
                    and 0 <= b.z < self.num_slices):
                raise BoundsViolation(f"box {b} outside {nx}x{ny}x{self.num_slices}")

    def boxes_at(self, z: int) -> list[Box2D]:
        return [b for b in self.boxes if b.z == z]


def _require(doc: dict, key: str, types) -> object:
    if key not in doc:
        raise SchemaViolation(f"missing field '{key}'")
    val = doc[key]
    if not isinstance(val, types):
        raise SchemaViolation(f"field '{key}' has wrong type {type(val).__name__}")
    return val


def _pair(doc: dict, key: str) -> tuple:
    val = _require(doc, key, (list, tuple))
    if len(val) != 2 or not all(isinstance(v, (int, float)) for v in val):
        raise SchemaViolation(f"field '{key}' must be a numeric pair, got {val!r}")
    return tuple(val)


def parse_detections(text: str, *, strict: bool = False,
                     score_threshold: float = DEFAULT_SCORE_THRESHOLD) -> DetectionSet:
    """Parse and validate one detections document.

    In strict mode any out-of-bounds box raises; otherwise such boxes are
    clamped (or dropped when nothing remains) with a warning. Boxes below
    ``score_threshold`` are filtered out.
    """
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        raise SchemaViolation(f"not valid JSON: {e}") from e
    if not isinstance(doc, dict):
        raise SchemaViolation("top level must be an object")
    version = _require(doc, "format_version", int)
    if version != FORMAT_VERSION:
        raise SchemaViolation(f"unsupported format_version {version}")
    scan_id = _require(doc, "scan_id", str)
    if not scan_id:
        raise EmptyScanId("scan_id must be nonempty")
    nx, ny = (int(v) for v in _pair(doc, "image_dims"))
    num_slices = int(_require(doc, "num_slices", int))
    raw_boxes = _require(doc, "boxes", list)

    boxes: list[Box2D] = []
    dropped = 0
    for i, entry in enumerate(raw_boxes):
        if not isinstance(entry, dict):
            raise SchemaViolation(f"boxes[{i}] is not an object")
        z = _require(entry, "z", int)
        x_lo, x_hi = _pair(entry, "x")
        y_lo, y_hi = _pair(entry, "y")
        score = float(_require(entry, "score", (int, float)))
        class_id = int(entry.get("class_id", 0))
        if not 0.0 <= score <= 1.0:
            raise SchemaViolation(f"boxes[{i}]: score {score} outside [0,1]")
        if not 0 <= z < num_slices:
            if strict:
                raise BoundsViolation(f"boxes[{i}]: z={z} outside [0,{num_slices})")
            dropped += 1
            continue
        x_min, x_max = math.floor(x_lo), math.ceil(x_hi)
        y_min, y_max = math.floor(y_lo), math.ceil(y_hi)
        if strict and not (0 <= x_min < x_max <= nx and 0 <= y_min < y_max <= ny):
            raise BoundsViolation(
                f"boxes[{i}]: [{x_min},{x_max})x[{y_min},{y_max}) outside {nx}x{ny}"
            )
        x_min, x_max = max(0, x_min), min(nx, x_max)
        y_min, y_max = max(0, y_min), min(ny, y_max)
        if x_min >= x_max or y_min >= y_max:
            dropped += 1
            continue
        if score < score_threshold:
            continue
        boxes.append(Box2D(z=z, x_min=x_min, x_max=x_max, y_min=y_min, y_max=y_max,
                           score=score, class_id=class_id))
    if dropped:
        log.warning("%s: dropped %d invalid box(es)", scan_id, dropped)
    return DetectionSet(
        scan_id=scan_id,
        image_dims=(nx, ny),
        num_slices=num_slices,
        boxes=tuple(boxes),
        detector_name=str(doc.get("detector_name", "")),
        preprocessing_tag=str(doc.get("preprocessing_tag", "")),
    )


def load_detections(path, **kwargs) -> DetectionSet:
    try:
        text = Path(path).read_text()
    except OSError as e:
        raise IoFailure(f"cannot read {path}: {e}") from e
    return parse_detections(text, **kwargs)


def to_document(dset: DetectionSet) -> dict:
    return {
        "format_version": FORMAT_VERSION,
        "scan_id": dset.scan_id,
        "image_dims": list(dset.image_dims),
        "num_slices": dset.num_slices,
        "detector_name": dset.detector_name,
        "preprocessing_tag": dset.preprocessing_tag,
        "boxes": [
            {"z": b.z, "x": [b.x_min, b.x_max], "y": [b.y_min, b.y_max],
             "score": b.score, "class_id": b.class_id}
            for b in dset.boxes
        ],
    }


def write_detections(dset: DetectionSet, path) -> None:
    try:
        Path(path).write_text(json.dumps(to_document(dset), indent=2) + "\n")
    except OSError as e:
        raise IoFailure(f"cannot write {path}: {e}") from e

"""Per-slice inference over a case directory, emitting detections JSON."""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from pathlib import Path

from .detector import load_detector
from .letterbox import letterbox_image
from .volume import load_slices

FORMAT_VERSION = 1


@dataclass(frozen=True)
class AdapterConfig:
    model: str = "stub"
    input_size: int = 416
    score_threshold: float = 0.25
    class_map: dict[int, int] = field(default_factory=dict)
    batch_size: int = 8


def _validate(doc: dict) -> None:
    """Self-check against the interchange schema before anything is written."""
    assert doc["format_version"] == FORMAT_VERSION
    assert isinstance(doc["scan_id"], str) and doc["scan_id"]
    nx, ny = doc["image_dims"]
    nz = doc["num_slices"]
    for b in doc["boxes"]:
        if not (0 <= b["x"][0] < b["x"][1] <= nx and 0 <= b["y"][0] < b["y"][1] <= ny
                and 0 <= b["z"] < nz and 0.0 <= b["score"] <= 1.0):
            raise ValueError(f"schema self-validation failed for box {b}")


def infer_volume(case_dir, config: AdapterConfig = AdapterConfig()) -> Path:
    """Run the configured detector on every slice of a case.

    Boxes are emitted in original pixel coordinates (letterbox inverted)
    and written atomically to ``<case>/detections.json``.
    """
    case_dir = Path(case_dir)
    slices, tag = load_slices(case_dir)
    detector = load_detector(config.model, case_dir)
    nx, ny = slices[0].shape

    boxes = []
    for z, plane in enumerate(slices):
        image, tf = letterbox_image(plane, config.input_size)
        for raw in detector(image, z, tf):
            mapped = tf.box_to_original(raw)
            if mapped["score"] < config.score_threshold:
                continue
            if mapped["x"][0] >= mapped["x"][1] or mapped["y"][0] >= mapped["y"][1]:
                continue
            boxes.append({
                "z": z,
                "x": [round(v, 3) for v in mapped["x"]],
                "y": [round(v, 3) for v in mapped["y"]],
                "score": mapped["score"],
                "class_id": config.class_map.get(mapped["class_id"], mapped["class_id"]),
            })

    doc = {
        "format_version": FORMAT_VERSION,
        "scan_id": case_dir.name,
        "image_dims": [nx, ny],
        "num_slices": len(slices),
        "detector_name": config.model,
        "preprocessing_tag": tag,
        "boxes": boxes,
    }
    _validate(doc)
    out = case_dir / "detections.json"
    tmp = case_dir / ".detections.json.tmp"
    tmp.write_text(json.dumps(doc, indent=2) + "\n")
    os.replace(tmp, out)
    return out

"""Detector backends. Ships with a stub that replays boxes from a sidecar
file so integration tests need no model weights.

A detector is a callable taking (letterboxed uint8 image, slice index,
transform) and returning boxes in model-input coordinates as dicts:
{"x": [lo, hi], "y": [lo, hi], "score": float, "class_id": int}.
"""

from __future__ import annotations

import json
from pathlib import Path

from .letterbox import LetterboxTransform


class StubDetector:
    """Replays sidecar boxes, projected into model-input coordinates.

    The sidecar (``stub_boxes.json``) lists boxes in original pixel
    coordinates; the stub forward-maps them through the letterbox so the
    adapter's inverse mapping is exercised exactly as it would be with a
    real model.
    """

    def __init__(self, sidecar_path):
        doc = json.loads(Path(sidecar_path).read_text())
        self._by_slice: dict[int, list[dict]] = {}
        for entry in doc["boxes"]:
            self._by_slice.setdefault(int(entry["z"]), []).append(entry)

    def __call__(self, image, z: int, tf: LetterboxTransform) -> list[dict]:
        out = []
        for entry in self._by_slice.get(z, []):
            x0, y0 = tf.to_model(entry["x"][0], entry["y"][0])
            x1, y1 = tf.to_model(entry["x"][1], entry["y"][1])
            out.append({
                "x": [x0, x1], "y": [y0, y1],
                "score": float(entry.get("score", 1.0)),
                "class_id": int(entry.get("class_id", 0)),
            })
        return out


def load_detector(model: str, case_dir) -> StubDetector:
    """Resolve a model spec. ``stub`` or ``stub:<path>`` loads the sidecar
    replay detector; anything else is rejected (real backends plug in here)."""
    if model == "stub":
        return StubDetector(Path(case_dir) / "stub_boxes.json")
    if model.startswith("stub:"):
        return StubDetector(model.split(":", 1)[1])
    raise ValueError(f"unknown model spec {model!r}; only the stub backend ships")

import json

import numpy as np
import pytest

from slicelift.detections import (
    DetectionSet, load_detections, parse_detections, to_document, write_detections,
)
from slicelift.errors import BoundsViolation, EmptyScanId, SchemaViolation
from slicelift.geometry import Box2D


def doc(boxes, nx=512, ny=512, nz=100):
    return {
        "format_version": 1,
        "scan_id": "case_00000",
        "image_dims": [nx, ny],
        "num_slices": nz,
        "detector_name": "test",
        "preprocessing_tag": "histeq(bins=4096,window=none)",
        "boxes": boxes,
    }


def box(z=5, x=(10, 50), y=(20, 60), score=0.9, class_id=0):
    return {"z": z, "x": list(x), "y": list(y), "score": score, "class_id": class_id}


class TestParse:
    def test_single_box(self):
        dset = parse_detections(json.dumps(doc([box()])))
        assert len(dset.boxes) == 1
        b = dset.boxes[0]
        assert (b.z, b.x_min, b.x_max, b.y_min, b.y_max) == (5, 10, 50, 20, 60)

    def test_fractional_rounded_outward(self):
        dset = parse_detections(json.dumps(doc([box(x=(10.2, 49.7))])))
        assert (dset.boxes[0].x_min, dset.boxes[0].x_max) == (10, 50)

    def test_out_of_slice_range(self):
        d = json.dumps(doc([box(z=100)]))
        with pytest.raises(BoundsViolation):
            parse_detections(d, strict=True)
        assert parse_detections(d).boxes == ()

    def test_out_of_image_bounds_clamped(self):
        dset = parse_detections(json.dumps(doc([box(x=(-5, 520))])))
        assert (dset.boxes[0].x_min, dset.boxes[0].x_max) == (0, 512)
        with pytest.raises(BoundsViolation):
            parse_detections(json.dumps(doc([box(x=(-5, 520))])), strict=True)

    def test_score_threshold_filters(self):
        d = json.dumps(doc([box(score=0.1), box(score=0.9)]))
        assert len(parse_detections(d).boxes) == 1
        assert len(parse_detections(d, score_threshold=0.0).boxes) == 2

    def test_missing_field(self):
        bad = doc([])
        del bad["num_slices"]
        with pytest.raises(SchemaViolation):
            parse_detections(json.dumps(bad))

    def test_wrong_type(self):
        bad = doc([])
        bad["image_dims"] = "512x512"
        with pytest.raises(SchemaViolation):
            parse_detections(json.dumps(bad))

    def test_empty_scan_id(self):
        bad = doc([])
        bad["scan_id"] = ""
        with pytest.raises(EmptyScanId):
            parse_detections(json.dumps(bad))

    def test_not_json(self):
        with pytest.raises(SchemaViolation):
            parse_detections("not json{")


class TestRoundTrip:
    def _set(self, boxes):
        return DetectionSet(scan_id="case_00000", image_dims=(512, 512),
                            num_slices=100, boxes=tuple(boxes),
                            detector_name="test", preprocessing_tag="tag")

    def test_identity(self, tmp_path):
        dset = self._set([Box2D(z=5, x_min=10, x_max=50, y_min=20, y_max=60, score=0.9)])
        write_detections(dset, tmp_path / "d.json")
        assert load_detections(tmp_path / "d.json", score_threshold=0.0) == dset

    def test_empty_boxes(self, tmp_path):
        dset = self._set([])
        write_detections(dset, tmp_path / "d.json")
        back = load_detections(tmp_path / "d.json")
        assert back == dset
        assert json.loads((tmp_path / "d.json").read_text())["boxes"] == []

    def test_large_set_preserves_order(self, tmp_path):
        rng = np.random.default_rng(11)
        boxes = []
        for _ in range(10_000):
            z = int(rng.integers(0, 100))
            x0 = int(rng.integers(0, 500)); y0 = int(rng.integers(0, 500))
            boxes.append(Box2D(z=z, x_min=x0, x_max=x0 + int(rng.integers(1, 12)),
                               y_min=y0, y_max=y0 + int(rng.integers(1, 12)),
                               score=float(rng.uniform(0.3, 1.0))))
        dset = self._set(boxes)
        write_detections(dset, tmp_path / "big.json")
        back = load_detections(tmp_path / "big.json", score_threshold=0.0)
        assert back.boxes == dset.boxes


class TestSetValidation:
    def test_out_of_bounds_box_rejected(self):
        with pytest.raises(BoundsViolation):
            DetectionSet(scan_id="s", image_dims=(32, 32), num_slices=4,
                         boxes=(Box2D(z=0, x_min=0, x_max=40, y_min=0, y_max=4),))

    def test_document_shape(self):
        dset = DetectionSet(scan_id="s", image_dims=(32, 32), num_slices=4)
        d = to_document(dset)
        assert d["format_version"] == 1
        assert set(d) == {"format_version", "scan_id", "image_dims", "num_slices",
                          "detector_name", "preprocessing_tag", "boxes"}

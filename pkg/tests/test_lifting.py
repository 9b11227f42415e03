import numpy as np
import pytest

from slicelift.detections import DetectionSet
from slicelift.errors import MixedSlices
from slicelift.geometry import Box2D, Box3D, iou_2d, iou_3d
from slicelift.lifting import (
    LiftParams, Track, boxes3d_from_document, boxes3d_to_document,
    lift, link_tracks, nms_2d, nms_3d, tracks_to_boxes,
)


def reference_nms(boxes, tau, iou_fn):
    """Quadratic greedy NMS, written independently of the implementation."""
    order = sorted(range(len(boxes)),
                   key=lambda i: (-boxes[i].score, boxes[i].x_min, boxes[i].y_min))
    kept = []
    suppressed = set()
    for i in order:
        if i in suppressed:
            continue
        kept.append(boxes[i])
        for j in order:
            if j != i and j not in suppressed and iou_fn(boxes[i], boxes[j]) > tau:
                suppressed.add(j)
    return kept


def b2(x0, x1, y0, y1, z=0, score=1.0):
    return Box2D(z=z, x_min=x0, x_max=x1, y_min=y0, y_max=y1, score=score)


def dset(boxes, dims=(128, 128), nz=64):
    return DetectionSet(scan_id="t", image_dims=dims, num_slices=nz, boxes=tuple(boxes))


def rand_boxes_2d(rng, n, z=0):
    out = []
    for _ in range(n):
        x0 = int(rng.integers(0, 50)); y0 = int(rng.integers(0, 50))
        out.append(b2(x0, x0 + int(rng.integers(2, 16)), y0, y0 + int(rng.integers(2, 16)),
                      z=z, score=float(rng.uniform(0, 1))))
    return out


class TestNms2d:
    def test_duplicate_suppressed(self):
        a = b2(0, 10, 0, 10, score=0.9)
        b = b2(0, 10, 0, 10, score=0.8)
        assert nms_2d([a, b], 0.45) == [a]

    def test_disjoint_both_survive(self):
        a = b2(0, 10, 0, 10, score=0.9)
        b = b2(50, 60, 50, 60, score=0.8)
        assert nms_2d([a, b], 0.45) == [a, b]

    def test_mixed_slices_rejected(self):
        with pytest.raises(MixedSlices):
            nms_2d([b2(0, 1, 0, 1, z=0), b2(0, 1, 0, 1, z=1)], 0.45)

    def test_matches_reference_on_random_instances(self):
        rng = np.random.default_rng(5)
        for _ in range(30):
            boxes = rand_boxes_2d(rng, 50)
            assert nms_2d(boxes, 0.45) == reference_nms(boxes, 0.45, iou_2d)

    def test_no_surviving_pair_overlaps(self):
        rng = np.random.default_rng(6)
        kept = nms_2d(rand_boxes_2d(rng, 40), 0.3)
        for i, a in enumerate(kept):
            for b in kept[i + 1:]:
                assert iou_2d(a, b) <= 0.3


class TestNms3d:
    def _rand(self, rng, n):
        out = []
        for _ in range(n):
            x0 = int(rng.integers(0, 40)); y0 = int(rng.integers(0, 40))
            z0 = int(rng.integers(0, 40))
            out.append(Box3D(x_min=x0, x_max=x0 + int(rng.integers(2, 12)),
                             y_min=y0, y_max=y0 + int(rng.integers(2, 12)),
                             z_min=z0, z_max=z0 + int(rng.integers(2, 12)),
                             score=float(rng.uniform(0, 1))))
        return out

    def test_duplicate_suppressed(self):
        a = Box3D(x_min=0, x_max=5, y_min=0, y_max=5, z_min=0, z_max=5, score=0.9)
        b = Box3D(x_min=0, x_max=5, y_min=0, y_max=5, z_min=0, z_max=5, score=0.2)
        assert nms_3d([a, b], 0.25) == [a]

    def test_matches_reference(self):
        rng = np.random.default_rng(9)
        for _ in range(30):
            boxes = self._rand(rng, 30)
            assert nms_3d(boxes, 0.25) == reference_nms(boxes, 0.25, iou_3d)


class TestLinkTracks:
    def test_identical_boxes_chain(self):
        boxes = [b2(10, 20, 10, 20, z=z, score=0.9) for z in range(5)]
        tracks = link_tracks(dset(boxes))
        assert len(tracks) == 1
        assert len(tracks[0]) == 5
        assert tracks[0].gaps == 0

    def test_large_shift_breaks_chain(self):
        # +20 px per slice on 10-wide boxes: adjacent IoU is 0
        boxes = [b2(20 * z, 20 * z + 10, 0, 10, z=z, score=0.9) for z in range(3)]
        assert iou_2d(boxes[0], boxes[1]) == 0.0
        tracks = link_tracks(dset(boxes))
        assert [len(t) for t in tracks] == [1, 1, 1]

    def test_gap_tolerance(self):
        # slice 2 missing; hand-traced: one track with gaps=1 at max_gap 1,
        # two tracks at max_gap 0
        boxes = [b2(10, 20, 10, 20, z=z, score=0.9) for z in (0, 1, 3, 4)]
        one = link_tracks(dset(boxes), LiftParams(max_gap=1))
        assert len(one) == 1 and one[0].gaps == 1
        two = link_tracks(dset(boxes), LiftParams(max_gap=0))
        assert [len(t) for t in two] == [2, 2]

    def test_classes_never_mix(self):
        a = [b2(10, 20, 10, 20, z=z, score=0.9) for z in range(3)]
        b = [Box2D(z=z, x_min=10, x_max=20, y_min=10, y_max=20, score=0.9, class_id=1)
             for z in range(3)]
        tracks = link_tracks(dset(a + b))
        assert len(tracks) == 2
        assert {t.class_id for t in tracks} == {0, 1}

    def test_one_box_per_track_per_slice(self):
        boxes = [b2(10, 20, 10, 20, z=0, score=0.9),
                 b2(10, 20, 10, 20, z=1, score=0.8),
                 b2(11, 21, 10, 20, z=1, score=0.7)]
        tracks = link_tracks(dset(boxes))
        assert sorted(len(t) for t in tracks) == [1, 2]

    def test_gap_monotonicity(self):
        rng = np.random.default_rng(12)
        for _ in range(50):
            boxes = []
            for z in range(8):
                if rng.uniform() < 0.3:
                    continue
                boxes.extend(rand_boxes_2d(rng, int(rng.integers(0, 4)), z=z))
            counts = [len(link_tracks(dset(boxes), LiftParams(max_gap=g)))
                      for g in (0, 1, 2, 3)]
            assert counts == sorted(counts, reverse=True)


class TestTracksToBoxes:
    def test_hull_of_identical_chain(self):
        t = Track([b2(2, 8, 3, 9, z=z, score=0.9) for z in range(5)])
        (box,) = tracks_to_boxes([t])
        assert (box.x_min, box.x_max, box.y_min, box.y_max, box.z_min, box.z_max) == \
            (2, 8, 3, 9, 0, 5)

    def test_short_track_dropped(self):
        t = Track([b2(2, 8, 3, 9, z=z, score=0.9) for z in range(2)])
        assert tracks_to_boxes([t], LiftParams(min_len=3)) == []

    def test_drifting_track_hull(self):
        t = Track([b2(z, z + 10, 0, 10, z=z, score=0.9) for z in range(5)])
        (box,) = tracks_to_boxes([t])
        assert (box.x_min, box.x_max) == (0, 14)


class TestLift:
    def test_empty_input(self):
        assert lift(dset([])) == []

    def test_perfect_single_object(self, standard_phantom):
        from slicelift.phantom import NoiseSpec, simulate_detections
        vol, labels, objects = standard_phantom
        ds = simulate_detections(objects, NoiseSpec(), (64, 64), 40)
        boxes = lift(ds)
        assert len(boxes) == len(objects)
        gt_boxes = sorted(((o.box3d.x_min, o.box3d.x_max, o.box3d.y_min, o.box3d.y_max,
                            o.box3d.z_min, o.box3d.z_max) for o in objects))
        got = sorted(((b.x_min, b.x_max, b.y_min, b.y_max, b.z_min, b.z_max)
                      for b in boxes))
        assert got == gt_boxes

    def test_members_contained_in_output(self):
        rng = np.random.default_rng(20)
        boxes = []
        for z in range(10):
            x0 = 10 + z
            boxes.append(b2(x0, x0 + 12, 20, 34, z=z, score=float(rng.uniform(0.5, 1))))
        out = lift(dset(boxes), LiftParams(min_len=1))
        for b in boxes:
            assert any(o.x_min <= b.x_min and o.x_max >= b.x_max
                       and o.y_min <= b.y_min and o.y_max >= b.y_max
                       and o.z_min <= b.z < o.z_max for o in out)

    def test_deterministic(self):
        rng = np.random.default_rng(21)
        boxes = []
        for z in range(6):
            boxes.extend(rand_boxes_2d(rng, 5, z=z))
        assert lift(dset(boxes)) == lift(dset(boxes))


class TestBoxes3dJson:
    def test_round_trip(self):
        boxes = [Box3D(x_min=1, x_max=4, y_min=2, y_max=8, z_min=0, z_max=3, score=0.5)]
        doc = boxes3d_to_document(boxes, "scan", LiftParams())
        assert doc["scan_id"] == "scan"
        assert doc["params"]["tau_link"] == 0.3
        assert boxes3d_from_document(doc) == boxes

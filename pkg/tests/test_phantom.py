import numpy as np
import pytest

from slicelift.detections import to_document
from slicelift.errors import SpecOutOfBounds
from slicelift.geometry import iou_2d
from slicelift.groundtruth import extract_gt
from slicelift.phantom import (
    Ellipsoid, NoiseSpec, PhantomSpec, generate_phantom, simulate_detections,
    standard_two_ellipsoid_spec,
)


def sphere_spec(radius=8.0, noise=0.0, seed=0):
    return PhantomSpec(dims=(64, 64, 64),
                       ellipsoids=(Ellipsoid((32.0, 32.0, 32.0), (radius,) * 3),),
                       noise_sigma=noise, seed=seed)


class TestGeneratePhantom:
    def test_sphere_voxel_count_near_analytic(self):
        vol, labels = generate_phantom(sphere_spec())
        count = int((labels.labels == 1).sum())
        expected = 4.0 / 3.0 * np.pi * 8.0 ** 3
        assert abs(count - expected) / expected < 0.03

    def test_lattice_count_matches_membership_formula(self):
        # the label mask must equal direct evaluation of the ellipsoid inequality
        vol, labels = generate_phantom(sphere_spec())
        x, y, z = np.mgrid[0:64, 0:64, 0:64].astype(float)
        member = ((x - 32) / 8) ** 2 + ((y - 32) / 8) ** 2 + ((z - 32) / 8) ** 2 <= 1
        assert np.array_equal(labels.labels == 1, member)

    def test_zero_drift_concentric_slices(self):
        vol, labels = generate_phantom(standard_two_ellipsoid_spec())
        (a, b) = extract_gt(labels)
        for obj in (a, b):
            centers = {(bx.x_min + bx.x_max, bx.y_min + bx.y_max)
                       for bx in obj.slice_boxes.values()}
            assert len(centers) == 1

    def test_drift_advances_slice_centers(self):
        spec = PhantomSpec(dims=(160, 64, 44),
                           ellipsoids=(Ellipsoid((80.0, 32.0, 22.0), (8.0, 8.0, 10.0),
                                                 drift=(3.0, 0.0)),))
        vol, labels = generate_phantom(spec)
        (obj,) = extract_gt(labels)
        zs = sorted(obj.slice_boxes)
        centers = [(obj.slice_boxes[z].x_min + obj.slice_boxes[z].x_max) / 2 for z in zs]
        diffs = np.diff(centers)
        # 3 px/slice within rasterization tolerance
        assert np.all(np.abs(diffs - 3.0) <= 1.0)

    def test_out_of_bounds_rejected(self):
        spec = PhantomSpec(dims=(16, 16, 16),
                           ellipsoids=(Ellipsoid((8.0, 8.0, 8.0), (10.0, 4.0, 4.0)),))
        with pytest.raises(SpecOutOfBounds):
            generate_phantom(spec)

    def test_noise_is_seeded(self):
        a, _ = generate_phantom(sphere_spec(noise=5.0, seed=3))
        b, _ = generate_phantom(sphere_spec(noise=5.0, seed=3))
        c, _ = generate_phantom(sphere_spec(noise=5.0, seed=4))
        assert np.array_equal(a.voxels, b.voxels)
        assert not np.array_equal(a.voxels, c.voxels)


class TestSimulateDetections:
    def test_noiseless_identity(self, standard_phantom):
        vol, labels, objects = standard_phantom
        ds = simulate_detections(objects, NoiseSpec(), (64, 64), 40)
        gt_boxes = {(b.z, b.x_min, b.x_max, b.y_min, b.y_max)
                    for o in objects for b in o.slice_boxes.values()}
        got = {(b.z, b.x_min, b.x_max, b.y_min, b.y_max) for b in ds.boxes}
        assert got == gt_boxes
        assert all(0.5 <= b.score <= 1.0 for b in ds.boxes)

    def test_high_drop_removes_almost_everything(self, standard_phantom):
        vol, labels, objects = standard_phantom
        total = sum(len(o.slice_boxes) for o in objects)
        ds = simulate_detections(objects, NoiseSpec(p_drop=0.99, seed=1), (64, 64), 40)
        assert len(ds.boxes) < total * 0.2

    def test_jitter_is_deterministic(self, standard_phantom):
        vol, labels, objects = standard_phantom
        noise = NoiseSpec(jitter_sigma=2.0, seed=5)
        a = simulate_detections(objects, noise, (64, 64), 40)
        b = simulate_detections(objects, noise, (64, 64), 40)
        assert to_document(a) == to_document(b)

    def test_false_positives_appear(self, standard_phantom):
        vol, labels, objects = standard_phantom
        total = sum(len(o.slice_boxes) for o in objects)
        ds = simulate_detections(objects, NoiseSpec(fp_rate=1.0, seed=2), (64, 64), 40)
        assert len(ds.boxes) > total

    def test_jittered_boxes_stay_valid(self, standard_phantom):
        vol, labels, objects = standard_phantom
        ds = simulate_detections(objects, NoiseSpec(jitter_sigma=6.0, seed=8), (64, 64), 40)
        for b in ds.boxes:
            assert 0 <= b.x_min < b.x_max <= 64
            assert 0 <= b.y_min < b.y_max <= 64


class TestEndToEndProperties:
    def test_noiseless_pipeline_is_perfect(self, standard_phantom):
        from slicelift.evaluation import score_scan
        from slicelift.lifting import lift
        vol, labels, objects = standard_phantom
        ds = simulate_detections(objects, NoiseSpec(), (64, 64), 40)
        m = score_scan(objects, ds, lift(ds))
        assert (m.dice_2d, m.iou_2d, m.dice_3d, m.iou_3d) == (1.0, 1.0, 1.0, 1.0)

    def test_strong_drift_fragments_objects(self):
        from slicelift.lifting import LiftParams, lift
        spec = PhantomSpec(dims=(150, 80, 33), ellipsoids=(
            Ellipsoid((75.0, 20.0, 16.0), (5.5, 8.0, 10.5), drift=(6.0, 0.0)),
            Ellipsoid((75.0, 60.0, 16.0), (5.5, 8.0, 10.5), drift=(6.0, 0.0)),
        ))
        vol, labels = generate_phantom(spec)
        objects = extract_gt(labels)
        worst = max(
            iou_2d(o.slice_boxes[a], o.slice_boxes[b])
            for o in objects
            for a, b in zip(sorted(o.slice_boxes), sorted(o.slice_boxes)[1:])
        )
        assert worst < LiftParams().tau_link
        ds = simulate_detections(objects, NoiseSpec(), (150, 80), 33)
        boxes = lift(ds, LiftParams(min_len=1))
        assert len(boxes) > len(objects)

"""Seeded synthetic CT phantoms: drifting ellipsoids plus detector noise.

A voxel (x, y, z) belongs to an ellipsoid when
    ((x-cx-dx*(z-cz))/rx)^2 + ((y-cy-dy*(z-cz))/ry)^2 + ((z-cz)/rz)^2 <= 1,
so a nonzero per-slice drift shears the shape away from the z axis without
rotated rasterization. All randomness comes from numpy's default_rng
(PCG64), so a fixed seed reproduces volumes and detection sets bit for bit
on any platform.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .detections import DetectionSet
from .errors import SpecOutOfBounds
from .geometry import Box2D
from .groundtruth import GtObject
from .volume_io import LabelVolume, Volume

__all__ = ["Ellipsoid", "PhantomSpec", "NoiseSpec", "generate_phantom",
           "simulate_detections", "standard_two_ellipsoid_spec"]


@dataclass(frozen=True)
class Ellipsoid:
    center: tuple[float, float, float]
    radii: tuple[float, float, float]
    drift: tuple[float, float] = (0.0, 0.0)
    intensity: float = 200.0


@dataclass(frozen=True)
class PhantomSpec:
    dims: tuple[int, int, int]
    ellipsoids: tuple[Ellipsoid, ...]
    background: float = -1000.0
    noise_sigma: float = 0.0
    seed: int = 0
    spacing: tuple[float, float, float] = (1.0, 1.0, 1.0)


@dataclass(frozen=True)
class NoiseSpec:
    jitter_sigma: float = 0.0
    p_drop: float = 0.0
    fp_rate: float = 0.0
    score_range: tuple[float, float] = (0.5, 1.0)
    seed: int = 0

    def __post_init__(self):
        if not 0.0 <= self.p_drop < 1.0:
            raise ValueError(f"p_drop {self.p_drop} outside [0,1)")
        if self.fp_rate < 0 or self.jitter_sigma < 0:
            raise ValueError("fp_rate and jitter_sigma must be >= 0")


def _check_bounds(spec: PhantomSpec) -> None:
    nx, ny, nz = spec.dims
    for e in spec.ellipsoids:
        cx, cy, cz = e.center
        rx, ry, rz = e.radii
        dx, dy = e.drift
        if min(rx, ry, rz) <= 0:
            raise SpecOutOfBounds(f"non-positive radius in {e}")
        if (cx - rx - abs(dx) * rz < 0 or cx + rx + abs(dx) * rz > nx - 1
                or cy - ry - abs(dy) * rz < 0 or cy + ry + abs(dy) * rz > ny - 1
                or cz - rz < 0 or cz + rz > nz - 1):
            raise SpecOutOfBounds(f"ellipsoid {e} does not fit in dims {spec.dims}")


def generate_phantom(spec: PhantomSpec) -> tuple[Volume, LabelVolume]:
    """Rasterize a PhantomSpec into an intensity volume and a label mask."""
    _check_bounds(spec)
    nx, ny, nz = spec.dims
    x = np.arange(nx, dtype=np.float64)[:, None, None]
    y = np.arange(ny, dtype=np.float64)[None, :, None]
    z = np.arange(nz, dtype=np.float64)[None, None, :]

    labels = np.zeros(spec.dims, dtype=np.int32)
    intensity = np.full(spec.dims, spec.background, dtype=np.float64)
    for i, e in enumerate(spec.ellipsoids, start=1):
        cx, cy, cz = e.center
        rx, ry, rz = e.radii
        dx, dy = e.drift
        member = (
            ((x - cx - dx * (z - cz)) / rx) ** 2
            + ((y - cy - dy * (z - cz)) / ry) ** 2
            + ((z - cz) / rz) ** 2
        ) <= 1.0
        labels[member] = i
        intensity[member] = e.intensity
    if spec.noise_sigma > 0:
        rng = np.random.default_rng(spec.seed)
        intensity += rng.normal(0.0, spec.noise_sigma, size=spec.dims)
    vol = Volume(dims=spec.dims, spacing=spec.spacing,
                 voxels=intensity.astype(np.float32))
    lab = LabelVolume(dims=spec.dims, spacing=spec.spacing, labels=labels)
    return vol, lab


def standard_two_ellipsoid_spec(seed: int = 0, drift: tuple[float, float] = (0.0, 0.0),
                                noise_sigma: float = 0.0) -> PhantomSpec:
    """The 64x64x40 two-kidney phantom used throughout the test suite.

    A nonzero drift grows the volume just enough for the sheared
    ellipsoids to stay inside it.
    """
    rz = 11.5
    pad_x = int(np.ceil(abs(drift[0]) * rz))
    pad_y = int(np.ceil(abs(drift[1]) * rz))
    return PhantomSpec(
        dims=(64 + 2 * pad_x, 64 + 2 * pad_y, 40),
        ellipsoids=(
            # non-integer z radius keeps the extremity slice boxes wide
            # enough to chain onto their neighbors at the default tau_link
            Ellipsoid(center=(20.0 + pad_x, 32.0 + pad_y, 20.0),
                      radii=(8.0, 10.0, rz), drift=drift),
            Ellipsoid(center=(44.0 + pad_x, 32.0 + pad_y, 20.0),
                      radii=(8.0, 10.0, rz), drift=drift),
        ),
        noise_sigma=noise_sigma,
        seed=seed,
    )


def simulate_detections(gt: list[GtObject], noise: NoiseSpec,
                        image_dims: tuple[int, int], num_slices: int,
                        scan_id: str = "phantom",
                        detector_name: str = "simulated") -> DetectionSet:
    """Perturb ground-truth slice boxes into a plausible detector output.

    Per slice box: dropped with probability p_drop, otherwise each edge is
    shifted by a rounded Gaussian of width jitter_sigma (validity and image
    bounds re-enforced) and the score is uniform in score_range. False
    positives arrive Poisson(fp_rate) per slice. Deterministic per seed.
    """
    rng = np.random.default_rng(noise.seed)
    nx, ny = image_dims
    lo, hi = noise.score_range
    boxes: list[Box2D] = []

    for obj in sorted(gt, key=lambda o: o.object_id):
        for z in sorted(obj.slice_boxes):
            b = obj.slice_boxes[z]
            if rng.uniform() < noise.p_drop:
                continue
            if noise.jitter_sigma > 0:
                j = np.rint(rng.normal(0.0, noise.jitter_sigma, size=4)).astype(int)
            else:
                j = np.zeros(4, dtype=int)
            x_min = int(np.clip(b.x_min + j[0], 0, nx - 1))
            x_max = int(np.clip(b.x_max + j[1], x_min + 1, nx))
            y_min = int(np.clip(b.y_min + j[2], 0, ny - 1))
            y_max = int(np.clip(b.y_max + j[3], y_min + 1, ny))
            score = float(rng.uniform(lo, hi))
            boxes.append(Box2D(z=z, x_min=x_min, x_max=x_max,
                               y_min=y_min, y_max=y_max,
                               score=score, class_id=b.class_id))

    if noise.fp_rate > 0:
        for z in range(num_slices):
            for _ in range(int(rng.poisson(noise.fp_rate))):
                w = int(rng.integers(4, max(5, nx // 4)))
                h = int(rng.integers(4, max(5, ny // 4)))
                x_min = int(rng.integers(0, nx - w))
                y_min = int(rng.integers(0, ny - h))
                score = float(rng.uniform(lo, hi))
                boxes.append(Box2D(z=z, x_min=x_min, x_max=x_min + w,
                                   y_min=y_min, y_max=y_min + h, score=score))

    return DetectionSet(
        scan_id=scan_id,
        image_dims=image_dims,
        num_slices=num_slices,
        boxes=tuple(boxes),
        detector_name=detector_name,
        preprocessing_tag="simulated",
    )

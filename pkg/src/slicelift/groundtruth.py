"""Ground-truth boxes from segmentation masks via 3D connected components.

Kidney and tumor labels are merged into one foreground class by default;
each connected component becomes one object with tight per-slice 2D boxes
and a tight 3D box. Component ids follow ascending first-voxel scan order
(x fastest) so extraction is deterministic.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .geometry import Box2D, Box3D, hull_3d
from .volume_io import LabelVolume

__all__ = ["GtObject", "binarize", "connected_components_3d", "extract_gt",
           "DEFAULT_MIN_VOXELS"]

DEFAULT_MIN_VOXELS = 50


@dataclass(frozen=True)
class GtObject:
    object_id: int
    box3d: Box3D
    slice_boxes: dict[int, Box2D]
    voxel_count: int


def binarize(labels: LabelVolume, foreground: set[int] | None = None) -> np.ndarray:
    """Boolean mask of voxels whose label is in ``foreground`` (default: all >= 1)."""
    if foreground is None:
        return labels.labels >= 1
    if not foreground:
        raise ValueError("foreground set must be nonempty")
    return np.isin(labels.labels, sorted(foreground))


def connected_components_3d(mask: np.ndarray, connectivity: int = 26) -> np.ndarray:
    """Label connected foreground regions 1..k, ids in first-voxel scan order."""
    if connectivity not in (6, 26):
        raise ValueError(f"connectivity must be 6 or 26, got {connectivity}")
    structure = ndimage.generate_binary_structure(3, 1 if connectivity == 6 else 3)
    labeled, count = ndimage.label(mask, structure=structure)
    if count <= 1:
        return labeled
    # relabel so id order matches first occurrence in x-fastest flat order
    flat = labeled.ravel(order="F")
    ids, first = np.unique(flat, return_index=True)
    order = [i for i, _ in sorted(zip(ids, first), key=lambda p: p[1]) if i != 0]
    remap = np.zeros(count + 1, dtype=labeled.dtype)
    for new_id, old_id in enumerate(order, start=1):
        remap[old_id] = new_id
    return remap[labeled]


def extract_gt(labels: LabelVolume, foreground: set[int] | None = None,
               connectivity: int = 26, min_voxels: int = DEFAULT_MIN_VOXELS) -> list[GtObject]:
    """Tight 2D and 3D boxes for every connected foreground object.

    Components smaller than ``min_voxels`` are discarded as mask noise.
    """
    mask = binarize(labels, foreground)
    labeled = connected_components_3d(mask, connectivity)
    objects: list[GtObject] = []
    next_id = 1
    for comp_id in range(1, int(labeled.max()) + 1):
        xs, ys, zs = np.nonzero(labeled == comp_id)
        count = xs.size
        if count < min_voxels:
            continue
        slice_boxes: dict[int, Box2D] = {}
        for z in np.unique(zs):
            sel = zs == z
            slice_boxes[int(z)] = Box2D(
                z=int(z),
                x_min=int(xs[sel].min()), x_max=int(xs[sel].max()) + 1,
                y_min=int(ys[sel].min()), y_max=int(ys[sel].max()) + 1,
                score=1.0,
            )
        objects.append(GtObject(
            object_id=next_id,
            box3d=hull_3d([slice_boxes[z] for z in sorted(slice_boxes)]),
            slice_boxes=slice_boxes,
            voxel_count=int(count),
        ))
        next_id += 1
    return objects


def gt_to_documents(objects: list[GtObject], scan_id: str,
                    image_dims: tuple[int, int], num_slices: int) -> tuple[dict, dict]:
    """Serialize ground truth in the detections / lifted-box JSON shapes."""
    doc2d = {
        "format_version": 1,
        "scan_id": scan_id,
        "image_dims": list(image_dims),
        "num_slices": num_slices,
        "detector_name": "groundtruth",
        "preprocessing_tag": "",
        "boxes": [
            {"z": b.z, "x": [b.x_min, b.x_max], "y": [b.y_min, b.y_max],
             "score": 1.0, "class_id": b.class_id, "object_id": o.object_id}
            for o in objects for b in (o.slice_boxes[z] for z in sorted(o.slice_boxes))
        ],
    }
    doc3d = {
        "scan_id": scan_id,
        "boxes3d": [
            {"x": [o.box3d.x_min, o.box3d.x_max], "y": [o.box3d.y_min, o.box3d.y_max],
             "z": [o.box3d.z_min, o.box3d.z_max], "score": 1.0,
             "class_id": o.box3d.class_id, "object_id": o.object_id,
             "voxel_count": o.voxel_count}
            for o in objects
        ],
    }
    return doc2d, doc3d

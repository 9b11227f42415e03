import numpy as np
import pytest

from slicelift.groundtruth import extract_gt
from slicelift.phantom import generate_phantom, standard_two_ellipsoid_spec


@pytest.fixture(scope="session")
def standard_phantom():
    """Noiseless, drift-free two-ellipsoid 64x64x40 phantom with its GT."""
    vol, labels = generate_phantom(standard_two_ellipsoid_spec())
    objects = extract_gt(labels)
    return vol, labels, objects


def brute_force_iou_2d(a, b, grid=160):
    """Pixel-membership IoU oracle on an explicit grid."""
    ga = np.zeros((grid, grid), dtype=bool)
    gb = np.zeros((grid, grid), dtype=bool)
    ga[a.x_min:a.x_max, a.y_min:a.y_max] = True
    gb[b.x_min:b.x_max, b.y_min:b.y_max] = True
    inter = int(np.sum(ga & gb))
    union = int(np.sum(ga | gb))
    return inter, union


def brute_force_iou_3d(a, b, grid=96):
    """Voxel-membership IoU oracle on an explicit grid."""
    ga = np.zeros((grid, grid, grid), dtype=bool)
    gb = np.zeros((grid, grid, grid), dtype=bool)
    ga[a.x_min:a.x_max, a.y_min:a.y_max, a.z_min:a.z_max] = True
    gb[b.x_min:b.x_max, b.y_min:b.y_max, b.z_min:b.z_max] = True
    inter = int(np.sum(ga & gb))
    union = int(np.sum(ga | gb))
    return inter, union

"""slicelift: detector-agnostic 2D-to-3D box lifting and evaluation for CT volumes."""

from .geometry import Box2D, Box3D, dice_2d, dice_3d, hull_3d, iou_2d, iou_3d
from .volume_io import LabelVolume, Volume, extract_slice, read_labels, read_nifti, write_nifti
from .preprocess import EqualizationParams, equalize_slice, preprocess_volume
from .detections import DetectionSet, load_detections, parse_detections, write_detections
from .lifting import LiftParams, Track, lift, link_tracks, nms_2d, nms_3d, tracks_to_boxes
from .groundtruth import GtObject, binarize, connected_components_3d, extract_gt
from .phantom import Ellipsoid, NoiseSpec, PhantomSpec, generate_phantom, simulate_detections
from .evaluation import EvalReport, MatchResult, ScanMetrics, aggregate, match_boxes, render_overlay, score_scan

__version__ = "0.1.0"

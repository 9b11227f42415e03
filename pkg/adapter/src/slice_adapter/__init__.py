"""slice-adapter: bridge 2D detectors to the slicelift detections format."""

from .infer import AdapterConfig, infer_volume
from .letterbox import letterbox_image, letterbox_transform

__version__ = "0.1.0"

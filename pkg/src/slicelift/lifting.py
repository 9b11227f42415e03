"""2D-to-3D box lifting: per-slice NMS, IoU slice chaining, 3D NMS.

The pipeline is: classic greedy NMS on each slice, then slices are walked
in ascending z and boxes are chained onto open tracks whenever their
planar IoU with the track's last member reaches ``tau_link`` (gap-tolerant
up to ``max_gap`` missing slices). Tracks of at least ``min_len`` members
become axis-aligned 3D boxes via the tight hull, and a final greedy 3D NMS
removes duplicate cuboids. Every step is deterministic for a fixed input.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .detections import DetectionSet
from .errors import MixedSlices
from .geometry import Box2D, Box3D, hull_3d, iou_2d, iou_3d

__all__ = ["LiftParams", "Track", "nms_2d", "link_tracks", "tracks_to_boxes", "nms_3d",
           "lift", "boxes3d_to_document", "boxes3d_from_document"]


@dataclass(frozen=True)
class LiftParams:
    tau_link: float = 0.3
    max_gap: int = 1
    min_len: int = 3
    tau_nms2d: float = 0.45
    tau_nms3d: float = 0.25

    def __post_init__(self):
        for name in ("tau_link", "tau_nms2d", "tau_nms3d"):
            v = getattr(self, name)
            if not 0.0 < v < 1.0:
                raise ValueError(f"{name} = {v} outside (0,1)")
        if self.max_gap < 0:
            raise ValueError("max_gap < 0")
        if self.min_len < 1:
            raise ValueError("min_len < 1")

    def as_dict(self) -> dict:
        return {
            "tau_link": self.tau_link,
            "max_gap": self.max_gap,
            "min_len": self.min_len,
            "tau_nms2d": self.tau_nms2d,
            "tau_nms3d": self.tau_nms3d,
        }


@dataclass
class Track:
    """Chain of 2D boxes over strictly increasing slice indices."""

    members: list[Box2D] = field(default_factory=list)

    @property
    def class_id(self) -> int:
        return self.members[0].class_id

    @property
    def last(self) -> Box2D:
        return self.members[-1]

    @property
    def first_z(self) -> int:
        return self.members[0].z

    @property
    def gaps(self) -> int:
        return sum(b.z - a.z - 1 for a, b in zip(self.members, self.members[1:]))

    def __len__(self) -> int:
        return len(self.members)


def _nms_key(b) -> tuple:
    return (-b.score, b.x_min, b.y_min)


def nms_2d(boxes: list[Box2D], tau: float) -> list[Box2D]:
    """Greedy NMS on one slice; survivors sorted by descending score."""
    if len({b.z for b in boxes}) > 1:
        raise MixedSlices(f"nms_2d got boxes from slices {sorted({b.z for b in boxes})}")
    remaining = sorted(boxes, key=_nms_key)
    kept: list[Box2D] = []
    while remaining:
        best = remaining.pop(0)
        kept.append(best)
        remaining = [b for b in remaining if iou_2d(best, b) <= tau]
    return kept


def nms_3d(boxes: list[Box3D], tau: float) -> list[Box3D]:
    """Greedy NMS over cuboids; same tie-break discipline as nms_2d."""
    remaining = sorted(boxes, key=_nms_key)
    kept: list[Box3D] = []
    while remaining:
        best = remaining.pop(0)
        kept.append(best)
        remaining = [b for b in remaining if iou_3d(best, b) <= tau]
    return kept


def _link_one_class(boxes: list[Box2D], params: LiftParams) -> list[Track]:
    open_tracks: list[Track] = []
    closed: list[Track] = []
    by_slice: dict[int, list[Box2D]] = {}
    for b in boxes:
        by_slice.setdefault(b.z, []).append(b)

    for z in sorted(by_slice):
        # retire tracks whose gap budget ran out before this slice
        still_open = []
        for t in open_tracks:
            if z - t.last.z > params.max_gap + 1:
                closed.append(t)
            else:
                still_open.append(t)
        open_tracks = still_open

        candidates = by_slice[z]
        pairs = []
        for ti, t in enumerate(open_tracks):
            for bi, b in enumerate(candidates):
                ov = iou_2d(t.last, b)
                if ov >= params.tau_link:
                    pairs.append((ov, b.score, b.x_min, b.y_min, ti, bi))
        # greedy by IoU, deterministic tie-break
        pairs.sort(key=lambda p: (-p[0], -p[1], p[2], p[3], p[4], p[5]))
        taken_tracks: set[int] = set()
        taken_boxes: set[int] = set()
        for _, _, _, _, ti, bi in pairs:
            if ti in taken_tracks or bi in taken_boxes:
                continue
            open_tracks[ti].members.append(candidates[bi])
            taken_tracks.add(ti)
            taken_boxes.add(bi)
        for bi, b in enumerate(candidates):
            if bi not in taken_boxes:
                open_tracks.append(Track([b]))

    closed.extend(open_tracks)
    closed.sort(key=lambda t: (t.first_z, t.members[0].x_min, t.members[0].y_min))
    return closed


def link_tracks(dset: DetectionSet, params: LiftParams = LiftParams()) -> list[Track]:
    """Chain per-slice boxes into tracks; classes are linked independently."""
    by_class: dict[int, list[Box2D]] = {}
    for b in dset.boxes:
        by_class.setdefault(b.class_id, []).append(b)
    tracks: list[Track] = []
    for cid in sorted(by_class):
        tracks.extend(_link_one_class(by_class[cid], params))
    tracks.sort(key=lambda t: (t.first_z, t.members[0].x_min, t.members[0].y_min, t.class_id))
    return tracks


def tracks_to_boxes(tracks: list[Track], params: LiftParams = LiftParams()) -> list[Box3D]:
    """Hull every track that reaches min_len; score is the mean member score."""
    return [hull_3d(t.members) for t in tracks if len(t) >= params.min_len]


def boxes3d_to_document(boxes: list[Box3D], scan_id: str,
                        params: LiftParams | None = None) -> dict:
    doc = {
        "scan_id": scan_id,
        "boxes3d": [
            {"x": [b.x_min, b.x_max], "y": [b.y_min, b.y_max],
             "z": [b.z_min, b.z_max], "score": b.score, "class_id": b.class_id}
            for b in boxes
        ],
    }
    if params is not None:
        doc["params"] = params.as_dict()
    return doc


def boxes3d_from_document(doc: dict) -> list[Box3D]:
    return [
        Box3D(x_min=e["x"][0], x_max=e["x"][1],
              y_min=e["y"][0], y_max=e["y"][1],
              z_min=e["z"][0], z_max=e["z"][1],
              score=float(e.get("score", 1.0)), class_id=int(e.get("class_id", 0)))
        for e in doc["boxes3d"]
    ]


def lift(dset: DetectionSet, params: LiftParams = LiftParams()) -> list[Box3D]:
    """Full pipeline: per-slice NMS, slice chaining, hulls, 3D NMS."""
    filtered: list[Box2D] = []
    groups: dict[tuple[int, int], list[Box2D]] = {}
    for b in dset.boxes:
        groups.setdefault((b.z, b.class_id), []).append(b)
    for key in sorted(groups):
        filtered.extend(nms_2d(groups[key], params.tau_nms2d))
    slim = DetectionSet(
        scan_id=dset.scan_id,
        image_dims=dset.image_dims,
        num_slices=dset.num_slices,
        boxes=tuple(filtered),
        detector_name=dset.detector_name,
        preprocessing_tag=dset.preprocessing_tag,
    )
    tracks = link_tracks(slim, params)
    boxes3d = tracks_to_boxes(tracks, params)
    by_class: dict[int, list[Box3D]] = {}
    for b in boxes3d:
        by_class.setdefault(b.class_id, []).append(b)
    out: list[Box3D] = []
    for cid in sorted(by_class):
        out.extend(nms_3d(by_class[cid], params.tau_nms3d))
    return out

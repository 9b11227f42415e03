"""Greedy GT/prediction matching and Dice/IoU scoring, per scan and aggregated.

Averaging is GT-anchored: every ground-truth box contributes its matched
Dice/IoU (zero when unmatched), so misses lower the scores while false
positives only hurt precision. Per-scan values are combined into the
aggregate as an unweighted mean. Volumes are voxel counts; spacing is
carried through the pipeline but never weights a metric.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field

import numpy as np

from .errors import EmptyInput, IoFailure, ScanMismatch
from .detections import DetectionSet
from .geometry import Box2D, Box3D, dice_2d, dice_3d, iou_2d, iou_3d
from .groundtruth import GtObject

__all__ = ["MatchResult", "ScanMetrics", "EvalReport", "match_boxes", "score_scan",
           "aggregate", "render_overlay", "format_table"]

MATCH_IOU_THRESHOLD = 0.5

GT_COLOR = (0, 255, 0)
PRED_COLOR = (255, 64, 0)


@dataclass(frozen=True)
class MatchResult:
    pairs: list[tuple[int, int, float, float]]  # (gt idx, pred idx, iou, dice)
    unmatched_gt: list[int]
    unmatched_pred: list[int]


def match_boxes(gt: list, pred: list, iou_fn, dice_fn) -> MatchResult:
    """One-to-one greedy matching by descending IoU over all overlapping pairs."""
    cand = []
    for gi, g in enumerate(gt):
        for pi, p in enumerate(pred):
            ov = iou_fn(g, p)
            if ov > 0:
                cand.append((ov, p.score, gi, pi))
    cand.sort(key=lambda c: (-c[0], -c[1], c[2], c[3]))
    pairs = []
    used_gt: set[int] = set()
    used_pred: set[int] = set()
    for ov, _, gi, pi in cand:
        if gi in used_gt or pi in used_pred:
            continue
        pairs.append((gi, pi, ov, dice_fn(gt[gi], pred[pi])))
        used_gt.add(gi)
        used_pred.add(pi)
    return MatchResult(
        pairs=pairs,
        unmatched_gt=[i for i in range(len(gt)) if i not in used_gt],
        unmatched_pred=[i for i in range(len(pred)) if i not in used_pred],
    )


@dataclass(frozen=True)
class ScanMetrics:
    scan_id: str
    dice_2d: float
    iou_2d: float
    dice_3d: float
    iou_3d: float
    precision_2d: float
    recall_2d: float
    precision_3d: float
    recall_3d: float
    counts: dict[str, int | float] = field(default_factory=dict)

    def as_dict(self) -> dict:
        return {
            "scan_id": self.scan_id,
            "dice_2d": self.dice_2d, "iou_2d": self.iou_2d,
            "dice_3d": self.dice_3d, "iou_3d": self.iou_3d,
            "precision_2d": self.precision_2d, "recall_2d": self.recall_2d,
            "precision_3d": self.precision_3d, "recall_3d": self.recall_3d,
            "counts": self.counts,
        }


def _mean(values: list[float]) -> float:
    return sum(values) / len(values) if values else 0.0


def score_scan(gt: list[GtObject], pred2d: DetectionSet | None,
               pred3d: list[Box3D], scan_id: str | None = None) -> ScanMetrics:
    """Score one scan in 2D (per-slice boxes) and 3D (whole objects)."""
    if scan_id is None:
        scan_id = pred2d.scan_id if pred2d is not None else "scan"
    if pred2d is not None and pred2d.scan_id != scan_id:
        raise ScanMismatch(f"detections are for {pred2d.scan_id}, expected {scan_id}")

    # 2D: match slice-by-slice over GT slice boxes
    gt_by_slice: dict[int, list[Box2D]] = {}
    for obj in gt:
        for z, b in obj.slice_boxes.items():
            gt_by_slice.setdefault(z, []).append(b)
    pred_by_slice: dict[int, list[Box2D]] = {}
    if pred2d is not None:
        for b in pred2d.boxes:
            pred_by_slice.setdefault(b.z, []).append(b)

    per_gt_dice: list[float] = []
    per_gt_iou: list[float] = []
    matched_dice: list[float] = []
    tp2d = 0
    n_pred2d = sum(len(v) for v in pred_by_slice.values())
    for z in sorted(set(gt_by_slice) | set(pred_by_slice)):
        res = match_boxes(gt_by_slice.get(z, []), pred_by_slice.get(z, []),
                          iou_2d, dice_2d)
        seen = {gi for gi, _, _, _ in res.pairs}
        for gi, _, ov, dc in res.pairs:
            per_gt_dice.append(dc)
            per_gt_iou.append(ov)
            matched_dice.append(dc)
            if ov >= MATCH_IOU_THRESHOLD:
                tp2d += 1
        per_gt_dice.extend(0.0 for _ in res.unmatched_gt)
        per_gt_iou.extend(0.0 for _ in res.unmatched_gt)
    n_gt2d = sum(len(v) for v in gt_by_slice.values())

    # 3D: match whole objects
    gt3d = [o.box3d for o in gt]
    res3d = match_boxes(gt3d, pred3d, iou_3d, dice_3d)
    d3 = [dc for _, _, _, dc in res3d.pairs] + [0.0] * len(res3d.unmatched_gt)
    i3 = [ov for _, _, ov, _ in res3d.pairs] + [0.0] * len(res3d.unmatched_gt)
    tp3d = sum(1 for _, _, ov, _ in res3d.pairs if ov >= MATCH_IOU_THRESHOLD)

    return ScanMetrics(
        scan_id=scan_id,
        dice_2d=_mean(per_gt_dice),
        iou_2d=_mean(per_gt_iou),
        dice_3d=_mean(d3),
        iou_3d=_mean(i3),
        precision_2d=tp2d / n_pred2d if n_pred2d else 0.0,
        recall_2d=tp2d / n_gt2d if n_gt2d else 0.0,
        precision_3d=tp3d / len(pred3d) if pred3d else 0.0,
        recall_3d=tp3d / len(gt3d) if gt3d else 0.0,
        counts={
            "n_gt_objects": len(gt),
            "n_gt_boxes_2d": n_gt2d,
            "n_pred_boxes_2d": n_pred2d,
            "n_pred_boxes_3d": len(pred3d),
            "tp_2d_at_0.5": tp2d,
            "tp_3d_at_0.5": tp3d,
            "mean_matched_dice_2d": _mean(matched_dice),
        },
    )


@dataclass(frozen=True)
class EvalReport:
    per_scan: list[ScanMetrics]
    params: dict = field(default_factory=dict)

    @property
    def aggregate(self) -> dict:
        keys = ("dice_2d", "iou_2d", "dice_3d", "iou_3d",
                "precision_2d", "recall_2d", "precision_3d", "recall_3d")
        return {k: _mean([getattr(m, k) for m in self.per_scan]) for k in keys} | {
            "n_scans": len(self.per_scan)
        }

    def to_json(self) -> str:
        doc = {
            "per_scan": {m.scan_id: m.as_dict() for m in self.per_scan},
            "aggregate": self.aggregate,
            "params": self.params,
        }
        return json.dumps(doc, indent=2, sort_keys=True) + "\n"

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["scan_id", "dice_2d", "iou_2d", "dice_3d", "iou_3d",
                    "precision_3d", "recall_3d"])
        for m in self.per_scan:
            w.writerow([m.scan_id, f"{m.dice_2d:.6f}", f"{m.iou_2d:.6f}",
                        f"{m.dice_3d:.6f}", f"{m.iou_3d:.6f}",
                        f"{m.precision_3d:.6f}", f"{m.recall_3d:.6f}"])
        agg = self.aggregate
        w.writerow([f"aggregate(n={agg['n_scans']})",
                    f"{agg['dice_2d']:.6f}", f"{agg['iou_2d']:.6f}",
                    f"{agg['dice_3d']:.6f}", f"{agg['iou_3d']:.6f}",
                    f"{agg['precision_3d']:.6f}", f"{agg['recall_3d']:.6f}"])
        return buf.getvalue()


def aggregate(per_scan: list[ScanMetrics], params: dict | None = None) -> EvalReport:
    if not per_scan:
        raise EmptyInput("no scans to aggregate")
    return EvalReport(per_scan=list(per_scan), params=params or {})


def format_table(report: EvalReport) -> str:
    """Aligned text table: Dice/IoU columns grouped under 2D and 3D."""
    name_w = max(20, max(len(m.scan_id) for m in report.per_scan) + 2)
    lines = []
    lines.append(f"{'':<{name_w}}{'2D':^16}{'3D':^16}")
    lines.append(f"{'Scan':<{name_w}}{'Dice':>8}{'IoU':>8}{'Dice':>8}{'IoU':>8}")
    for m in report.per_scan:
        lines.append(
            f"{m.scan_id:<{name_w}}"
            f"{m.dice_2d:>8.3f}{m.iou_2d:>8.3f}{m.dice_3d:>8.3f}{m.iou_3d:>8.3f}"
        )
    agg = report.aggregate
    label = f"Aggregate (n={agg['n_scans']})"
    lines.append(
        f"{label:<{name_w}}"
        f"{agg['dice_2d']:>8.3f}{agg['iou_2d']:>8.3f}"
        f"{agg['dice_3d']:>8.3f}{agg['iou_3d']:>8.3f}"
    )
    return "\n".join(lines) + "\n"


def _draw_border(rgb: np.ndarray, box: Box2D, color: tuple[int, int, int]) -> None:
    x0, x1 = box.x_min, box.x_max - 1
    y0, y1 = box.y_min, box.y_max - 1
    for c in range(3):
        rgb[x0:x1 + 1, y0, c] = color[c]
        rgb[x0:x1 + 1, y1, c] = color[c]
        rgb[x0, y0:y1 + 1, c] = color[c]
        rgb[x1, y0:y1 + 1, c] = color[c]


def render_overlay(plane: np.ndarray, gt: list[Box2D], pred: list[Box2D], path) -> None:
    """Write a P6 PPM: grayscale slice with GT boxes in green, predictions
    in orange (drawn last, so predictions win where outlines cross)."""
    plane = np.asarray(plane, dtype=np.uint8)
    nx, ny = plane.shape
    rgb = np.repeat(plane[:, :, None], 3, axis=2).copy()
    for b in gt:
        _draw_border(rgb, b, GT_COLOR)
    for b in pred:
        _draw_border(rgb, b, PRED_COLOR)
    try:
        with open(path, "wb") as fh:
            fh.write(f"P6\n{nx} {ny}\n255\n".encode("ascii"))
            fh.write(rgb.transpose(1, 0, 2).tobytes(order="C"))
    except OSError as e:
        raise IoFailure(f"cannot write {path}: {e}") from e

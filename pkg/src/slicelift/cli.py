"""Command-line pipeline over KiTS-style case directories.

A case directory holds ``imaging.nii.gz`` plus optionally
``segmentation.nii.gz`` and ``detections.json``; every subcommand writes
its outputs under ``<case>/derived/`` and never touches the inputs. The
directory name is the scan id. Exit codes: 0 success, 1 usage error,
2 data error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import detections as det
from . import evaluation as ev
from . import groundtruth as gt
from . import lifting
from . import phantom as ph
from . import preprocess as pp
from . import volume_io as vio
from .errors import SliceliftError

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError(message)


def _case_paths(case: Path) -> dict[str, Path]:
    return {
        "imaging": case / "imaging.nii.gz",
        "segmentation": case / "segmentation.nii.gz",
        "detections": case / "detections.json",
        "derived": case / "derived",
    }


def _need(path: Path) -> Path:
    if not path.exists():
        raise SliceliftError(f"missing required file: {path}")
    return path


def _write_json(path: Path, doc: dict) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")


def _lift_params(args) -> lifting.LiftParams:
    return lifting.LiftParams(
        tau_link=args.tau_link, max_gap=args.max_gap, min_len=args.min_len,
        tau_nms2d=args.tau_nms2d, tau_nms3d=args.tau_nms3d,
    )


def _add_lift_flags(p) -> None:
    p.add_argument("--tau-link", type=float, default=0.3, dest="tau_link")
    p.add_argument("--max-gap", type=int, default=1, dest="max_gap")
    p.add_argument("--min-len", type=int, default=3, dest="min_len")
    p.add_argument("--tau-nms2d", type=float, default=0.45, dest="tau_nms2d")
    p.add_argument("--tau-nms3d", type=float, default=0.25, dest="tau_nms3d")
    p.add_argument("--score-threshold", type=float,
                   default=det.DEFAULT_SCORE_THRESHOLD, dest="score_threshold")


def _add_gt_flags(p) -> None:
    p.add_argument("--min-voxels", type=int, default=gt.DEFAULT_MIN_VOXELS,
                   dest="min_voxels")
    p.add_argument("--connectivity", type=int, choices=(6, 26), default=26)


def cmd_info(args) -> int:
    vol = vio.read_nifti(_need(Path(args.case) / "imaging.nii.gz"))
    print(f"scan_id:     {Path(args.case).name}")
    print(f"dims:        {vol.dims[0]} x {vol.dims[1]} x {vol.dims[2]}")
    print(f"spacing_mm:  {vol.spacing[0]:g} x {vol.spacing[1]:g} x {vol.spacing[2]:g}")
    print(f"dtype_code:  {vol.source_dtype}")
    print(f"endianness:  {'little' if vol.endianness == '<' else 'big'}")
    print(f"intensity:   [{vol.voxels.min():g}, {vol.voxels.max():g}]")
    return EXIT_OK


def cmd_preprocess(args) -> int:
    case = Path(args.case)
    paths = _case_paths(case)
    vol = vio.read_nifti(_need(paths["imaging"]))
    window = None
    if args.window:
        lo, hi = (float(v) for v in args.window.split(","))
        window = (lo, hi)
    params = pp.EqualizationParams(bins=args.bins, window=window)
    stack = pp.preprocess_volume(vol, params)
    out_dir = paths["derived"] / "pgm"
    out_dir.mkdir(parents=True, exist_ok=True)
    scan_id = case.name
    for z in range(vol.dims[2]):
        pp.write_pgm(stack[:, :, z], out_dir / pp.slice_filename(scan_id, z))
    _write_json(paths["derived"] / "preprocess.json", {
        "scan_id": scan_id,
        "num_slices": vol.dims[2],
        "params": {"bins": params.bins, "window": list(window) if window else None},
        "preprocessing_tag": params.tag(),
    })
    print(f"wrote {vol.dims[2]} slices to {out_dir}")
    return EXIT_OK


def cmd_gt_extract(args) -> int:
    case = Path(args.case)
    paths = _case_paths(case)
    labels = vio.read_labels(_need(paths["segmentation"]))
    objects = gt.extract_gt(labels, connectivity=args.connectivity,
                            min_voxels=args.min_voxels)
    doc2d, doc3d = gt.gt_to_documents(objects, case.name,
                                      (labels.dims[0], labels.dims[1]), labels.dims[2])
    for doc in (doc2d, doc3d):
        doc["params"] = {"min_voxels": args.min_voxels,
                         "connectivity": args.connectivity}
    _write_json(paths["derived"] / "gt2d.json", doc2d)
    _write_json(paths["derived"] / "gt3d.json", doc3d)
    print(f"extracted {len(objects)} object(s)")
    return EXIT_OK


def cmd_lift(args) -> int:
    case = Path(args.case)
    paths = _case_paths(case)
    dset = det.load_detections(_need(paths["detections"]),
                               score_threshold=args.score_threshold)
    params = _lift_params(args)
    boxes = lifting.lift(dset, params)
    doc = lifting.boxes3d_to_document(boxes, dset.scan_id, params)
    doc["params"]["score_threshold"] = args.score_threshold
    _write_json(paths["derived"] / "boxes3d.json", doc)
    print(f"lifted {len(dset.boxes)} 2D boxes into {len(boxes)} 3D box(es)")
    return EXIT_OK


def _score_case(case: Path, args) -> ev.ScanMetrics:
    paths = _case_paths(case)
    labels = vio.read_labels(_need(paths["segmentation"]))
    dset = det.load_detections(_need(paths["detections"]),
                               score_threshold=args.score_threshold)
    objects = gt.extract_gt(labels, connectivity=args.connectivity,
                            min_voxels=args.min_voxels)
    boxes3d = lifting.lift(dset, _lift_params(args))
    return ev.score_scan(objects, dset, boxes3d, scan_id=case.name)


def cmd_eval(args) -> int:
    cases = [Path(c) for c in args.cases]
    jobs = int(os.environ.get("SLICELIFT_JOBS", "1"))
    if jobs > 1 and len(cases) > 1:
        from concurrent.futures import ProcessPoolExecutor
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            metrics = list(pool.map(_score_case, cases, [args] * len(cases)))
    else:
        metrics = [_score_case(c, args) for c in cases]
    params = _lift_params(args).as_dict() | {
        "score_threshold": args.score_threshold,
        "min_voxels": args.min_voxels,
        "connectivity": args.connectivity,
    }
    report = ev.aggregate(metrics, params)
    out_dir = Path(args.out) if args.out else (cases[0] / "derived")
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "eval.json").write_text(report.to_json())
    table = ev.format_table(report)
    (out_dir / "eval.txt").write_text(table)
    if args.csv:
        (out_dir / "eval.csv").write_text(report.to_csv())
    print(table, end="")
    return EXIT_OK


def cmd_phantom(args) -> int:
    out = Path(args.case)
    out.mkdir(parents=True, exist_ok=True)
    drift = tuple(float(v) for v in args.drift.split(","))
    spec = ph.standard_two_ellipsoid_spec(seed=args.seed, drift=drift,
                                          noise_sigma=args.noise_sigma)
    vol, labels = ph.generate_phantom(spec)
    vio.write_nifti(vol, out / "imaging.nii.gz")
    vio.write_nifti(labels, out / "segmentation.nii.gz")
    objects = gt.extract_gt(labels)
    noise = ph.NoiseSpec(jitter_sigma=args.jitter_sigma, p_drop=args.p_drop,
                         fp_rate=args.fp_rate, seed=args.seed)
    dset = ph.simulate_detections(objects, noise, (vol.dims[0], vol.dims[1]),
                                  vol.dims[2], scan_id=out.name)
    det.write_detections(dset, out / "detections.json")
    doc2d, doc3d = gt.gt_to_documents(objects, out.name,
                                      (vol.dims[0], vol.dims[1]), vol.dims[2])
    derived = out / "derived"
    _write_json(derived / "gt2d.json", doc2d)
    _write_json(derived / "gt3d.json", doc3d)
    print(f"phantom case written to {out}")
    return EXIT_OK


def cmd_render(args) -> int:
    case = Path(args.case)
    paths = _case_paths(case)
    vol = vio.read_nifti(_need(paths["imaging"]))
    plane = pp.equalize_slice(vio.extract_slice(vol, args.z))
    gt_boxes: list = []
    gt2d_path = paths["derived"] / "gt2d.json"
    if gt2d_path.exists():
        doc = json.loads(gt2d_path.read_text())
        gt_boxes = [b for b in det.parse_detections(
            json.dumps(doc), score_threshold=0.0).boxes if b.z == args.z]
    pred_boxes: list = []
    if paths["detections"].exists():
        dset = det.load_detections(paths["detections"],
                                   score_threshold=args.score_threshold)
        pred_boxes = dset.boxes_at(args.z)
    out = Path(args.out) if args.out else paths["derived"] / f"overlay_z{args.z:04d}.ppm"
    out.parent.mkdir(parents=True, exist_ok=True)
    ev.render_overlay(plane, gt_boxes, pred_boxes, out)
    print(f"wrote {out}")
    return EXIT_OK


def build_parser() -> _Parser:
    parser = _Parser(prog="slicelift",
                     description="2D-to-3D detection lifting and evaluation for CT volumes")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("info", help="dump volume header info")
    p.add_argument("case")
    p.set_defaults(func=cmd_info)

    p = sub.add_parser("preprocess", help="histogram-equalize every slice to PGM")
    p.add_argument("case")
    p.add_argument("--bins", type=int, default=4096)
    p.add_argument("--window", default=None, help="lo,hi intensity clamp")
    p.set_defaults(func=cmd_preprocess)

    p = sub.add_parser("gt-extract", help="derive GT boxes from the segmentation mask")
    p.add_argument("case")
    _add_gt_flags(p)
    p.set_defaults(func=cmd_gt_extract)

    p = sub.add_parser("lift", help="lift detections.json into 3D boxes")
    p.add_argument("case")
    _add_lift_flags(p)
    p.set_defaults(func=cmd_lift)

    p = sub.add_parser("eval", help="score one or more cases against their masks")
    p.add_argument("cases", nargs="+")
    _add_lift_flags(p)
    _add_gt_flags(p)
    p.add_argument("--csv", action="store_true")
    p.add_argument("--out", default=None, help="output directory for the report")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("phantom", help="generate a synthetic two-kidney case")
    p.add_argument("case")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--drift", default="0,0", help="dx,dy pixels per slice")
    p.add_argument("--noise-sigma", type=float, default=0.0, dest="noise_sigma")
    p.add_argument("--jitter-sigma", type=float, default=0.0, dest="jitter_sigma")
    p.add_argument("--p-drop", type=float, default=0.0, dest="p_drop")
    p.add_argument("--fp-rate", type=float, default=0.0, dest="fp_rate")
    p.set_defaults(func=cmd_phantom)

    p = sub.add_parser("render", help="overlay GT and predicted boxes on one slice")
    p.add_argument("case")
    p.add_argument("--z", type=int, required=True)
    p.add_argument("--out", default=None)
    p.add_argument("--score-threshold", type=float,
                   default=det.DEFAULT_SCORE_THRESHOLD, dest="score_threshold")
    p.set_defaults(func=cmd_render)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as e:
        print(f"usage error: {e}", file=sys.stderr)
        return EXIT_USAGE
    try:
        return args.func(args)
    except SliceliftError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_DATA


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()

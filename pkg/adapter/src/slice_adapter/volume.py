"""Slice sources for the adapter: preprocessed PGM files or a raw NIfTI volume.

When a case directory has ``derived/pgm/`` slices from the pipeline's
preprocess step they are used as-is. Otherwise the imaging volume is read
directly and each slice goes through the same histogram equalization
(cumulative-histogram remap over 4096 bins to 256 levels, per slice).
"""

from __future__ import annotations

import gzip
import re
import struct
from pathlib import Path

import numpy as np

HISTEQ_BINS = 4096

_DTYPES = {2: np.uint8, 4: np.int16, 8: np.int32, 16: np.float32,
           64: np.float64, 512: np.uint16}


def read_nifti_volume(path) -> np.ndarray:
    """Minimal single-file NIfTI-1 reader returning a float32 (nx, ny, nz) grid."""
    raw = Path(path).read_bytes()
    if raw[:2] == b"\x1f\x8b":
        raw = gzip.decompress(raw)
    order = "<" if struct.unpack("<i", raw[:4])[0] == 348 else ">"
    if struct.unpack(order + "i", raw[:4])[0] != 348 or raw[344:348] != b"n+1\x00":
        raise ValueError(f"{path}: not a single-file NIfTI-1 volume")
    dim = struct.unpack(order + "8h", raw[40:56])
    datatype = struct.unpack(order + "h", raw[70:72])[0]
    if datatype not in _DTYPES:
        raise ValueError(f"{path}: unsupported datatype {datatype}")
    vox_offset, slope, inter = struct.unpack(order + "3f", raw[108:120])
    nx, ny, nz = (max(1, d) for d in dim[1:4])
    dt = np.dtype(_DTYPES[datatype]).newbyteorder(order)
    flat = np.frombuffer(raw, dtype=dt, count=nx * ny * nz, offset=int(vox_offset))
    grid = flat.reshape((nx, ny, nz), order="F").astype(np.float32)
    return grid * (slope if slope != 0 else 1.0) + inter


def equalize(plane: np.ndarray, bins: int = HISTEQ_BINS) -> np.ndarray:
    """The pipeline's per-slice histogram equalization to uint8."""
    a = np.asarray(plane, dtype=np.float64)
    lo, hi = a.min(), a.max()
    if lo == hi:
        return np.zeros(a.shape, dtype=np.uint8)
    idx = np.clip(((a - lo) / (hi - lo) * bins).astype(np.int64), 0, bins - 1)
    hist = np.bincount(idx.ravel(), minlength=bins)
    cdf = np.cumsum(hist) / a.size
    cdf_min = cdf[np.flatnonzero(hist)[0]]
    if cdf_min >= 1.0:
        return np.zeros(a.shape, dtype=np.uint8)
    return np.rint(255 * (cdf[idx] - cdf_min) / (1.0 - cdf_min)).astype(np.uint8)


def read_pgm(path) -> np.ndarray:
    raw = Path(path).read_bytes()
    if not raw.startswith(b"P5"):
        raise ValueError(f"{path}: not a binary PGM")
    header = re.match(rb"P5\s+(\d+)\s+(\d+)\s+(\d+)\s", raw)
    if header is None:
        raise ValueError(f"{path}: malformed PGM header")
    nx, ny, maxval = (int(g) for g in header.groups())
    if maxval != 255:
        raise ValueError(f"{path}: unsupported maxval {maxval}")
    data = np.frombuffer(raw, dtype=np.uint8, count=nx * ny, offset=header.end())
    return data.reshape((ny, nx)).T.copy()


def load_slices(case_dir) -> tuple[list[np.ndarray], str]:
    """Return equalized uint8 slices for a case, plus a preprocessing tag.

    Prefers ``derived/pgm/*.pgm`` (pipeline output); falls back to reading
    and equalizing ``imaging.nii.gz`` directly.
    """
    case_dir = Path(case_dir)
    pgm_dir = case_dir / "derived" / "pgm"
    pgms = sorted(pgm_dir.glob("*.pgm")) if pgm_dir.is_dir() else []
    if pgms:
        by_z = {}
        for p in pgms:
            m = re.search(r"_z(\d+)\.pgm$", p.name)
            if m is None:
                raise ValueError(f"unrecognized slice filename {p.name}")
            by_z[int(m.group(1))] = read_pgm(p)
        return [by_z[z] for z in sorted(by_z)], "pgm-precomputed"
    imaging = case_dir / "imaging.nii.gz"
    if not imaging.exists():
        imaging = case_dir / "imaging.nii"
    if not imaging.exists():
        raise FileNotFoundError(f"no PGM slices and no imaging volume in {case_dir}")
    grid = read_nifti_volume(imaging)
    slices = [equalize(grid[:, :, z]) for z in range(grid.shape[2])]
    return slices, f"histeq(bins={HISTEQ_BINS},window=none)"

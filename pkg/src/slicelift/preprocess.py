"""Per-slice histogram equalization to 8-bit, as applied before detection.

Each slice is equalized independently over its own intensity range (or an
optional fixed window). The mapping is the classic cumulative-histogram
remap: v -> round(255 * (cdf(v) - cdf_min) / (1 - cdf_min)), computed over
``bins`` equal-width bins. A constant slice maps to all zeros.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import NonFiniteInput
from .volume_io import Volume

__all__ = ["EqualizationParams", "equalize_slice", "preprocess_volume", "write_pgm", "read_pgm"]


@dataclass(frozen=True)
class EqualizationParams:
    bins: int = 4096
    window: tuple[float, float] | None = None
    output_levels: int = 256

    def __post_init__(self):
        if self.bins < 2:
            raise ValueError(f"bins {self.bins} < 2")
        if self.window is not None and not self.window[0] < self.window[1]:
            raise ValueError(f"bad window {self.window}")

    def tag(self) -> str:
        w = "none" if self.window is None else f"{self.window[0]:g}:{self.window[1]:g}"
        return f"histeq(bins={self.bins},window={w})"


def equalize_slice(plane: np.ndarray, params: EqualizationParams = EqualizationParams()) -> np.ndarray:
    """Histogram-equalize one slice to uint8. Monotone and deterministic."""
    a = np.asarray(plane, dtype=np.float64)
    if a.size == 0:
        raise ValueError("empty slice")
    if not np.isfinite(a).all():
        raise NonFiniteInput("slice contains NaN/Inf")
    if params.window is not None:
        a = np.clip(a, params.window[0], params.window[1])
    lo, hi = a.min(), a.max()
    if lo == hi:
        return np.zeros(a.shape, dtype=np.uint8)

    bins = params.bins
    idx = ((a - lo) / (hi - lo) * bins).astype(np.int64)
    np.clip(idx, 0, bins - 1, out=idx)
    hist = np.bincount(idx.ravel(), minlength=bins)
    cdf = np.cumsum(hist) / a.size
    cdf_min = cdf[np.flatnonzero(hist)[0]]
    if cdf_min >= 1.0:
        return np.zeros(a.shape, dtype=np.uint8)
    top = params.output_levels - 1
    out = np.rint(top * (cdf[idx] - cdf_min) / (1.0 - cdf_min))
    return out.astype(np.uint8)


def preprocess_volume(volume: Volume, params: EqualizationParams = EqualizationParams()) -> np.ndarray:
    """Equalize every slice independently; returns a uint8 (nx, ny, nz) stack."""
    nx, ny, nz = volume.dims
    out = np.empty((nx, ny, nz), dtype=np.uint8)
    for z in range(nz):
        out[:, :, z] = equalize_slice(volume.voxels[:, :, z], params)
    return out


def write_pgm(plane: np.ndarray, path) -> None:
    """Write a uint8 (nx, ny) grid as binary PGM (P5), row-major in y."""
    plane = np.asarray(plane, dtype=np.uint8)
    nx, ny = plane.shape
    with open(path, "wb") as fh:
        fh.write(f"P5\n{nx} {ny}\n255\n".encode("ascii"))
        fh.write(plane.T.tobytes(order="C"))


def read_pgm(path) -> np.ndarray:
    """Read a binary PGM (P5) back into a uint8 (nx, ny) grid."""
    raw = Path(path).read_bytes()
    if not raw.startswith(b"P5"):
        raise ValueError(f"{path}: not a binary PGM")
    fields: list[bytes] = []
    pos = 2
    while len(fields) < 3:
        while pos < len(raw) and raw[pos : pos + 1].isspace():
            pos += 1
        if raw[pos : pos + 1] == b"#":
            while raw[pos : pos + 1] not in (b"\n", b""):
                pos += 1
            continue
        start = pos
        while pos < len(raw) and not raw[pos : pos + 1].isspace():
            pos += 1
        fields.append(raw[start:pos])
    pos += 1  # single whitespace after maxval
    nx, ny, maxval = (int(f) for f in fields)
    if maxval != 255:
        raise ValueError(f"{path}: unsupported maxval {maxval}")
    data = np.frombuffer(raw, dtype=np.uint8, count=nx * ny, offset=pos)
    return data.reshape((ny, nx)).T.copy()


def slice_filename(scan_id: str, z: int) -> str:
    return f"{scan_id}_z{z:04d}.pgm"

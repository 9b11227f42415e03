"""Minimal NIfTI-1 reader/writer for single-file ("n+1") volumes.

Only the header fields the pipeline needs are interpreted: dims, voxel
spacing, datatype, intensity scaling and the data offset. Orientation
matrices are deliberately ignored; every downstream coordinate is a voxel
index with the slice axis fixed to the third dimension. Gzip containers
are detected by their leading magic bytes.
"""

from __future__ import annotations

import gzip
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import (
    BadDimension,
    CorruptHeader,
    IndexOutOfRange,
    IoFailure,
    TruncatedData,
    UnsupportedDatatype,
    ValueOverflow,
)

__all__ = ["Volume", "LabelVolume", "read_nifti", "read_labels", "write_nifti", "extract_slice"]

HEADER_SIZE = 348
VOX_OFFSET_OUT = 352  # header + 4-byte extension pad

# NIfTI-1 datatype code -> numpy dtype (without byte order)
DTYPE_BY_CODE = {
    2: np.dtype(np.uint8),
    4: np.dtype(np.int16),
    8: np.dtype(np.int32),
    16: np.dtype(np.float32),
    64: np.dtype(np.float64),
    512: np.dtype(np.uint16),
}
CODE_BY_KIND = {np.dtype(k).str[1:]: c for c, k in DTYPE_BY_CODE.items()}

GZIP_MAGIC = b"\x1f\x8b"


@dataclass(frozen=True)
class Volume:
    """Dense scalar grid with spacing metadata, scaled to float32.

    ``voxels`` is indexed [x, y, z]; the flat on-disk order is x-fastest.
    """

    dims: tuple[int, int, int]
    spacing: tuple[float, float, float]
    voxels: np.ndarray
    source_dtype: int = 16
    endianness: str = "<"

    def __post_init__(self):
        nx, ny, nz = self.dims
        if nx < 1 or ny < 1 or nz < 1:
            raise ValueError(f"bad dims {self.dims}")
        if self.voxels.shape != (nx, ny, nz):
            raise ValueError(f"voxel shape {self.voxels.shape} != dims {self.dims}")
        if any(s <= 0 for s in self.spacing):
            raise ValueError(f"non-positive spacing {self.spacing}")
        if not np.isfinite(self.voxels).all():
            raise ValueError("volume contains non-finite voxels")


@dataclass(frozen=True)
class LabelVolume:
    """Integer segmentation mask; 0 is background."""

    dims: tuple[int, int, int]
    spacing: tuple[float, float, float]
    labels: np.ndarray

    def __post_init__(self):
        nx, ny, nz = self.dims
        if self.labels.shape != (nx, ny, nz):
            raise ValueError(f"label shape {self.labels.shape} != dims {self.dims}")
        if any(s <= 0 for s in self.spacing):
            raise ValueError(f"non-positive spacing {self.spacing}")
        if self.labels.min() < 0:
            raise ValueError("negative label values")


def _read_bytes(path) -> bytes:
    try:
        raw = Path(path).read_bytes()
    except OSError as e:
        raise IoFailure(f"cannot read {path}: {e}") from e
    if raw[:2] == GZIP_MAGIC:
        try:
            raw = gzip.decompress(raw)
        except OSError as e:
            raise CorruptHeader(f"bad gzip stream in {path}: {e}") from e
    return raw


def _parse_header(raw: bytes, path) -> tuple[str, dict]:
    if len(raw) < HEADER_SIZE:
        raise CorruptHeader(f"{path}: {len(raw)} bytes, need {HEADER_SIZE} for header")
    order = None
    for cand in ("<", ">"):
        if struct.unpack(cand + "i", raw[0:4])[0] == HEADER_SIZE:
            order = cand
            break
    if order is None:
        raise CorruptHeader(f"{path}: sizeof_hdr is not 348 under either byte order")
    magic = raw[344:348]
    if magic != b"n+1\x00":
        raise CorruptHeader(f"{path}: magic {magic!r}, only single-file 'n+1' supported")
    dim = struct.unpack(order + "8h", raw[40:56])
    if not 1 <= dim[0] <= 7:
        raise BadDimension(f"{path}: dim[0] = {dim[0]} outside [1,7]")
    datatype = struct.unpack(order + "h", raw[70:72])[0]
    if datatype not in DTYPE_BY_CODE:
        raise UnsupportedDatatype(f"{path}: datatype code {datatype}")
    pixdim = struct.unpack(order + "8f", raw[76:108])
    vox_offset, scl_slope, scl_inter = struct.unpack(order + "3f", raw[108:120])
    fields = {
        "dims": tuple(max(1, int(d)) for d in dim[1:4]),
        "spacing": tuple(float(p) if p > 0 else 1.0 for p in pixdim[1:4]),
        "datatype": datatype,
        "vox_offset": int(vox_offset),
        "scl_slope": scl_slope,
        "scl_inter": scl_inter,
    }
    return order, fields


def _read_raw(path) -> tuple[str, dict, np.ndarray]:
    raw = _read_bytes(path)
    order, hdr = _parse_header(raw, path)
    nx, ny, nz = hdr["dims"]
    dt = DTYPE_BY_CODE[hdr["datatype"]].newbyteorder(order)
    count = nx * ny * nz
    need = count * dt.itemsize
    data = raw[hdr["vox_offset"] : hdr["vox_offset"] + need]
    if len(data) < need:
        raise TruncatedData(f"{path}: need {need} data bytes, found {len(data)}")
    flat = np.frombuffer(data, dtype=dt, count=count)
    grid = flat.reshape((nx, ny, nz), order="F")
    return order, hdr, grid


def read_nifti(path) -> Volume:
    """Read a (possibly gzipped) single-file NIfTI-1 volume.

    Voxels are returned as float32 after scl_slope/scl_inter scaling;
    a slope of 0 is treated as 1 per the format convention.
    """
    order, hdr, grid = _read_raw(path)
    slope = hdr["scl_slope"] if hdr["scl_slope"] != 0 else 1.0
    voxels = (grid.astype(np.float32) * np.float32(slope)) + np.float32(hdr["scl_inter"])
    return Volume(
        dims=hdr["dims"],
        spacing=hdr["spacing"],
        voxels=voxels,
        source_dtype=hdr["datatype"],
        endianness=order,
    )


def read_labels(path) -> LabelVolume:
    """Read a segmentation mask, keeping voxel values as integers."""
    _, hdr, grid = _read_raw(path)
    return LabelVolume(
        dims=hdr["dims"],
        spacing=hdr["spacing"],
        labels=np.rint(np.asarray(grid)).astype(np.int32),
    )


def _pack_header(dims, spacing, datatype, order: str) -> bytes:
    dt = DTYPE_BY_CODE[datatype]
    hdr = bytearray(HEADER_SIZE)
    struct.pack_into(order + "i", hdr, 0, HEADER_SIZE)
    dim = (3, dims[0], dims[1], dims[2], 1, 1, 1, 1)
    struct.pack_into(order + "8h", hdr, 40, *dim)
    struct.pack_into(order + "h", hdr, 70, datatype)
    struct.pack_into(order + "h", hdr, 72, dt.itemsize * 8)  # bitpix
    pixdim = (1.0, spacing[0], spacing[1], spacing[2], 1.0, 1.0, 1.0, 1.0)
    struct.pack_into(order + "8f", hdr, 76, *pixdim)
    struct.pack_into(order + "3f", hdr, 108, float(VOX_OFFSET_OUT), 1.0, 0.0)
    hdr[344:348] = b"n+1\x00"
    return bytes(hdr)


def write_nifti(volume, path, dtype: int | None = None, *, order: str = "<",
                round_ok: bool = False) -> None:
    """Write a Volume or LabelVolume as single-file NIfTI-1.

    ``dtype`` is a NIfTI datatype code; defaults to float32 for volumes
    and the smallest integer type that fits for label masks. Values that
    do not fit the target dtype raise ValueOverflow unless ``round_ok``
    permits rounding floats to integers. A ``.gz`` suffix selects gzip
    output (written with a zeroed timestamp so outputs are reproducible).
    """
    if isinstance(volume, LabelVolume):
        data = volume.labels
        if dtype is None:
            dtype = 2 if data.max() <= 255 else (512 if data.max() <= 65535 else 8)
    else:
        data = volume.voxels
        if dtype is None:
            dtype = 16
    if dtype not in DTYPE_BY_CODE:
        raise UnsupportedDatatype(f"datatype code {dtype}")
    dt = DTYPE_BY_CODE[dtype].newbyteorder(order)

    arr = np.asarray(data)
    if dt.kind in "iu":
        info = np.iinfo(dt)
        if arr.min() < info.min or arr.max() > info.max:
            raise ValueOverflow(
                f"values [{arr.min()},{arr.max()}] do not fit datatype {dtype}"
            )
        if arr.dtype.kind == "f" and not np.array_equal(arr, np.rint(arr)):
            if not round_ok:
                raise ValueOverflow(
                    f"non-integer values cannot be stored as datatype {dtype} "
                    "(pass round_ok=True to round)"
                )
            arr = np.rint(arr)
    out = np.asfortranarray(arr.astype(dt))

    payload = _pack_header(volume.dims, volume.spacing, dtype, order)
    payload += b"\x00" * (VOX_OFFSET_OUT - HEADER_SIZE)
    payload += out.tobytes(order="F")
    try:
        if str(path).endswith(".gz"):
            # empty filename + fixed mtime keep gzip output reproducible
            with open(path, "wb") as fh:
                with gzip.GzipFile(filename="", fileobj=fh, mode="wb", mtime=0) as gz:
                    gz.write(payload)
        else:
            Path(path).write_bytes(payload)
    except OSError as e:
        raise IoFailure(f"cannot write {path}: {e}") from e


def extract_slice(volume: Volume, z: int) -> np.ndarray:
    """Return the (nx, ny) plane at slice index z."""
    if not 0 <= z < volume.dims[2]:
        raise IndexOutOfRange(f"slice {z} outside [0,{volume.dims[2]})")
    return np.array(volume.voxels[:, :, z])

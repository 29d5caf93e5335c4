"""Dense source-to-target correspondence fields (Middlebury .flo container).

A field stores one (dx, dy) displacement per source pixel. Fields are
either read from a .flo file produced by an external flow estimator or
generated as the identity for registered image pairs.
"""

from __future__ import annotations

import os
import struct
from dataclasses import dataclass, field

import numpy as np

FLO_MAGIC = 202021.25


class FlowFormatError(ValueError):
    """Raised on malformed .flo input."""


@dataclass
class CorrespondenceField:
    """H x W x 2 float array of (dx, dy) pixel displacements."""

    flow: np.ndarray = field(repr=False)

    def __post_init__(self):
        arr = np.asarray(self.flow, dtype=np.float64)
        if arr.ndim != 3 or arr.shape[2] != 2:
            raise ValueError(f"expected (H, W, 2) array, got shape {arr.shape}")
        if arr.shape[0] < 1 or arr.shape[1] < 1:
            raise ValueError("field must be at least 1x1")
        if not np.all(np.isfinite(arr)):
            raise ValueError("flow displacements must be finite")
        arr = np.ascontiguousarray(arr)
        arr.flags.writeable = False
        object.__setattr__(self, "flow", arr)

    @property
    def height(self) -> int:
        return self.flow.shape[0]

    @property
    def width(self) -> int:
        return self.flow.shape[1]


def load_flo(path) -> CorrespondenceField:
    """Read a Middlebury .flo file.

    Layout: float32 magic 202021.25, int32 width, int32 height, then
    width*height interleaved (dx, dy) float32 pairs, row-major, all
    little-endian.
    """
    if not os.path.exists(path):
        raise FileNotFoundError(f"flow file not found: {path}")
    with open(path, "rb") as f:
        header = f.read(12)
        if len(header) < 12:
            raise FlowFormatError(f"truncated .flo header in {path}")
        magic, width, height = struct.unpack("<fii", header)
        # 202021.25 is exactly representable in float32, so == is safe.
        if magic != FLO_MAGIC:
            raise FlowFormatError(
                f"bad .flo magic {magic!r} in {path} (expected {FLO_MAGIC})"
            )
        if width <= 0 or height <= 0:
            raise FlowFormatError(f"non-positive dimensions {width}x{height} in {path}")
        payload = f.read(width * height * 8)
    if len(payload) < width * height * 8:
        raise FlowFormatError(
            f"truncated .flo payload in {path}: "
            f"got {len(payload)} bytes, need {width * height * 8}"
        )
    data = np.frombuffer(payload, dtype="<f4").reshape(height, width, 2)
    return CorrespondenceField(data.astype(np.float64))


def write_flo(fld: CorrespondenceField, path) -> None:
    """Write a field in the .flo layout read by load_flo.

    Displacements are stored as float32, so write->read round-trips
    bit-exactly for any field whose values are float32-representable.
    """
    with open(path, "wb") as f:
        f.write(struct.pack("<fii", FLO_MAGIC, fld.width, fld.height))
        f.write(fld.flow.astype("<f4").tobytes())


def identity_field(width: int, height: int) -> CorrespondenceField:
    """All-zero displacements, the registered-pair correspondence."""
    if width < 1 or height < 1:
        raise ValueError(f"field dimensions must be >= 1, got {width}x{height}")
    return CorrespondenceField(np.zeros((height, width, 2)))


def round_half_away(t):
    """Round to nearest integer, halves away from zero (vectorized)."""
    t = np.asarray(t, dtype=np.float64)
    return np.where(t >= 0.0, np.floor(t + 0.5), np.ceil(t - 0.5))


def target_coords(fld: CorrespondenceField, x: int, y: int,
                  target_w: int, target_h: int) -> tuple[int, int]:
    """Target pixel matched to source pixel (x, y): displace, round, clamp."""
    dx, dy = fld.flow[y, x]
    tx = int(round_half_away(x + dx))
    ty = int(round_half_away(y + dy))
    return (min(max(tx, 0), target_w - 1), min(max(ty, 0), target_h - 1))


def target_coord_grids(fld: CorrespondenceField,
                       target_w: int, target_h: int) -> tuple[np.ndarray, np.ndarray]:
    """target_coords evaluated for every source pixel at once.

    Returns (tx, ty) int64 arrays of shape (H, W), already clamped into
    the target raster.
    """
    ys, xs = np.mgrid[0:fld.height, 0:fld.width]
    tx = round_half_away(xs + fld.flow[:, :, 0]).astype(np.int64)
    ty = round_half_away(ys + fld.flow[:, :, 1]).astype(np.int64)
    np.clip(tx, 0, target_w - 1, out=tx)
    np.clip(ty, 0, target_h - 1, out=ty)
    return tx, ty

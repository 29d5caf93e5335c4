"""Overlapping m x m patch features, correspondence pairing, and merging.

A pixel's feature row concatenates, for each of the m*m neighbourhood
positions in row-major patch order, the neighbour's RGB triple followed
(in the with-position variant) by its two scaled grid coordinates, so
d = m*m*3 or m*m*5. Borders replicate the nearest pixel.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .flow import CorrespondenceField, target_coord_grids
from .image import ImageBuffer


@dataclass
class PatchPairSet:
    """Index-aligned source/target feature rows, the transfer's working state.

    x holds the (mutable-by-replacement) source features, y the fixed
    target features; row i of x corresponds to row i of y.
    """

    x: np.ndarray = field(repr=False)
    y: np.ndarray = field(repr=False)
    m: int = 1
    with_position: bool = False
    position_scale: float = 1.0

    def __post_init__(self):
        if self.x.shape != self.y.shape:
            raise ValueError(f"x/y shape mismatch: {self.x.shape} vs {self.y.shape}")
        per_pixel = 5 if self.with_position else 3
        if self.x.shape[1] != self.m * self.m * per_pixel:
            raise ValueError(
                f"feature dim {self.x.shape[1]} does not match "
                f"m={self.m}, with_position={self.with_position}"
            )
        if not (np.all(np.isfinite(self.x)) and np.all(np.isfinite(self.y))):
            raise ValueError("features must be finite")

    @property
    def n(self) -> int:
        return self.x.shape[0]

    @property
    def d(self) -> int:
        return self.x.shape[1]


def _check_patch_side(m: int) -> int:
    if m < 1 or m % 2 == 0:
        raise ValueError(f"patch side must be odd and >= 1, got {m}")
    return m


def default_position_scale(*dims: int) -> float:
    """255 / (largest dimension - 1), mapping coordinates onto the colour scale."""
    return 255.0 / max(max(dims) - 1, 1)


def extract_patches(img: ImageBuffer, m: int, with_position: bool = False,
                    position_scale: float = 1.0) -> np.ndarray:
    """One feature row per pixel, centre pixels in row-major order."""
    _check_patch_side(m)
    h, w = img.height, img.width
    r = m // 2
    per_pixel = 5 if with_position else 3
    padded = np.pad(img.data, ((r, r), (r, r), (0, 0)), mode="edge")
    out = np.empty((h * w, m * m * per_pixel), dtype=np.float64)
    if with_position:
        # Coordinates of the replicated neighbour, i.e. clamped into range.
        cols = np.arange(w, dtype=np.float64)
        rows = np.arange(h, dtype=np.float64)
    for slot in range(m * m):
        py, px = divmod(slot, m)
        base = slot * per_pixel
        block = padded[py:py + h, px:px + w, :]
        out[:, base:base + 3] = block.reshape(h * w, 3)
        if with_position:
            xs = np.clip(cols + (px - r), 0.0, w - 1.0) * position_scale
            ys = np.clip(rows + (py - r), 0.0, h - 1.0) * position_scale
            grid_x = np.broadcast_to(xs, (h, w))
            grid_y = np.broadcast_to(ys[:, None], (h, w))
            out[:, base + 3] = grid_x.reshape(-1)
            out[:, base + 4] = grid_y.reshape(-1)
    return out


def build_pairs(source: ImageBuffer, target: ImageBuffer, fld: CorrespondenceField,
                m: int, with_position: bool = False,
                position_scale: float | None = None) -> PatchPairSet:
    """Pair every source pixel's patch with its corresponding target patch.

    Row i of y is the target patch at the flow-displaced (rounded,
    clamped) position of source pixel i; its position features use the
    target pixel's own coordinates. position_scale=None picks the
    default from the larger dimension of either image.
    """
    _check_patch_side(m)
    if (fld.width, fld.height) != (source.width, source.height):
        raise ValueError(
            f"field {fld.width}x{fld.height} does not match "
            f"source {source.width}x{source.height}"
        )
    if position_scale is None:
        position_scale = default_position_scale(
            source.width, source.height, target.width, target.height)
    x = extract_patches(source, m, with_position, position_scale)
    target_feats = extract_patches(target, m, with_position, position_scale)
    tx, ty = target_coord_grids(fld, target.width, target.height)
    flat = (ty * target.width + tx).reshape(-1)
    y = target_feats[flat]
    return PatchPairSet(x=x, y=y, m=m, with_position=with_position,
                        position_scale=float(position_scale))


def merge_candidates(final_x: np.ndarray, width: int, height: int, m: int,
                     with_position: bool = False) -> ImageBuffer:
    """Average, per pixel, every colour triple the overlapping patches offer it.

    Patch slot (py, px) of the patch centred at (cy, cx) refers to pixel
    (cx + px - r, cy + py - r); slots that replicated a border pixel
    contribute to that border pixel. Each pixel is the plain mean of its
    candidates; position features are ignored. Accumulation order is
    fixed (slot-major), so output is bit-stable.
    """
    _check_patch_side(m)
    per_pixel = 5 if with_position else 3
    expected = (width * height, m * m * per_pixel)
    if final_x.shape != expected:
        raise ValueError(f"expected feature matrix {expected}, got {final_x.shape}")
    r = m // 2
    acc = np.zeros((height * width, 3), dtype=np.float64)
    counts = np.zeros(height * width, dtype=np.int64)
    cols = np.arange(width, dtype=np.int64)
    rows = np.arange(height, dtype=np.int64)
    for slot in range(m * m):
        py, px = divmod(slot, m)
        base = slot * per_pixel
        tx = np.clip(cols + (px - r), 0, width - 1)
        ty = np.clip(rows + (py - r), 0, height - 1)
        flat = (ty[:, None] * width + tx[None, :]).reshape(-1)
        np.add.at(acc, flat, final_x[:, base:base + 3])
        np.add.at(counts, flat, 1)
    acc /= counts[:, None]
    return ImageBuffer(acc.reshape(height, width, 3))

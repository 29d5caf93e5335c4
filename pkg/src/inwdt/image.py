"""Image raster container and 8-bit PNG/JPEG I/O.

All pixel data is carried as float64 on the 0-255 scale; the kernel
bandwidth defaults elsewhere in the package assume 8-bit colour units,
so nothing here rescales to [0, 1].
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field

import numpy as np
from PIL import Image, UnidentifiedImageError


class ImageFormatError(ValueError):
    """Raised when a file cannot be decoded as an 8-bit RGB raster."""


@dataclass
class ImageBuffer:
    """H x W x 3 float64 raster, channel values on the 0-255 scale.

    Immutable after construction: the underlying array is marked
    read-only so buffers can be shared freely.
    """

    data: np.ndarray = field(repr=False)

    def __post_init__(self):
        arr = np.asarray(self.data, dtype=np.float64)
        if arr.ndim != 3 or arr.shape[2] != 3:
            raise ValueError(f"expected (H, W, 3) array, got shape {arr.shape}")
        if arr.shape[0] < 1 or arr.shape[1] < 1:
            raise ValueError("image must be at least 1x1")
        if not np.all(np.isfinite(arr)):
            raise ValueError("image samples must be finite")
        arr = np.ascontiguousarray(arr)
        arr.flags.writeable = False
        object.__setattr__(self, "data", arr)

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]

    def quantized(self) -> np.ndarray:
        """8-bit view of the buffer: clamp to [0, 255], round half away from zero."""
        clamped = np.clip(self.data, 0.0, 255.0)
        return np.floor(clamped + 0.5).astype(np.uint8)


def load_image(path) -> ImageBuffer:
    """Decode an 8-bit RGB PNG or JPEG into an ImageBuffer.

    Channel values are the decoded bytes promoted to float64; no rescaling.
    Alpha channels and non-RGB layouts are rejected rather than converted.
    """
    if not os.path.exists(path):
        raise FileNotFoundError(f"image file not found: {path}")
    try:
        img = Image.open(path)
        img.load()
    except UnidentifiedImageError as exc:
        raise ImageFormatError(f"cannot decode image file: {path}") from exc
    if img.format not in ("PNG", "JPEG"):
        raise ImageFormatError(
            f"unsupported container {img.format!r} for {path}; expected PNG or JPEG"
        )
    if img.mode in ("RGBA", "LA", "PA"):
        raise ImageFormatError(f"alpha channel not supported: {path} (mode {img.mode})")
    if img.mode != "RGB":
        raise ImageFormatError(
            f"non-RGB channel layout {img.mode!r} in {path}; expected 8-bit RGB"
        )
    return ImageBuffer(np.asarray(img, dtype=np.float64))


def save_image(img: ImageBuffer, path) -> None:
    """Write the buffer as an 8-bit RGB PNG (clamp, round half away from zero)."""
    out = Image.fromarray(img.quantized(), mode="RGB")
    try:
        out.save(path, format="PNG")
    except OSError as exc:
        raise OSError(f"cannot write image to {path}: {exc}") from exc


def pixel_at(img: ImageBuffer, x: int, y: int) -> np.ndarray:
    """Pixel at (x, y) with replicate padding for out-of-range coordinates."""
    xc = min(max(x, 0), img.width - 1)
    yc = min(max(y, 0), img.height - 1)
    return img.data[yc, xc]

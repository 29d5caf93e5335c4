"""Image fidelity metrics on 0-255 RGB buffers."""

from __future__ import annotations

import math

import numpy as np
from scipy.ndimage import correlate1d

from .image import ImageBuffer

SSIM_WINDOW = 11
SSIM_SIGMA = 1.5
_C1 = (0.01 * 255.0) ** 2
_C2 = (0.03 * 255.0) ** 2


def _check_same_shape(a: ImageBuffer, b: ImageBuffer) -> None:
    if a.data.shape != b.data.shape:
        raise ValueError(
            f"image shapes differ: {a.data.shape} vs {b.data.shape}")


def psnr(a: ImageBuffer, b: ImageBuffer) -> float:
    """Peak signal-to-noise ratio over all channels jointly, peak 255.

    Identical images give math.inf.
    """
    _check_same_shape(a, b)
    diff = a.data - b.data
    mse = float(np.mean(diff * diff))
    if mse == 0.0:
        return math.inf
    return 10.0 * math.log10(255.0 ** 2 / mse)


def _luma(img: ImageBuffer) -> np.ndarray:
    d = img.data
    return 0.299 * d[:, :, 0] + 0.587 * d[:, :, 1] + 0.114 * d[:, :, 2]


def _gauss_window() -> np.ndarray:
    half = SSIM_WINDOW // 2
    t = np.arange(-half, half + 1, dtype=np.float64)
    w = np.exp(-(t * t) / (2.0 * SSIM_SIGMA * SSIM_SIGMA))
    return w / w.sum()


def _windowed_mean(plane: np.ndarray, w: np.ndarray) -> np.ndarray:
    # Separable filter, then crop to windows fully inside the image.
    half = SSIM_WINDOW // 2
    out = correlate1d(plane, w, axis=0, mode="constant")
    out = correlate1d(out, w, axis=1, mode="constant")
    return out[half:-half, half:-half]


def ssim(a: ImageBuffer, b: ImageBuffer) -> float:
    """Mean structural similarity of the luma planes.

    Gaussian 11x11 windows (sigma 1.5), evaluated only where the window
    fits entirely inside the image, so both dimensions must be >= 11.
    The standard stabilizers for a 255 dynamic range are used.
    """
    _check_same_shape(a, b)
    if a.height < SSIM_WINDOW or a.width < SSIM_WINDOW:
        raise ValueError(
            f"images must be at least {SSIM_WINDOW}x{SSIM_WINDOW} for ssim, "
            f"got {a.width}x{a.height}")
    x = _luma(a)
    y = _luma(b)
    w = _gauss_window()
    mu_x = _windowed_mean(x, w)
    mu_y = _windowed_mean(y, w)
    xx = _windowed_mean(x * x, w)
    yy = _windowed_mean(y * y, w)
    xy = _windowed_mean(x * y, w)
    var_x = xx - mu_x * mu_x
    var_y = yy - mu_y * mu_y
    cov = xy - mu_x * mu_y
    num = (2.0 * mu_x * mu_y + _C1) * (2.0 * cov + _C2)
    den = (mu_x * mu_x + mu_y * mu_y + _C1) * (var_x + var_y + _C2)
    return float(np.mean(num / den))

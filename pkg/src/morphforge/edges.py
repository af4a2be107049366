"""Classic Canny edge detection: Gaussian blur, Sobel gradients, non-maximum
suppression, and double-threshold hysteresis."""

from __future__ import annotations

import numpy as np
from scipy import ndimage

# Sobel kernels scaled so a unit step produces a unit gradient response.
_SOBEL_X = np.array([[-1, 0, 1], [-2, 0, 2], [-1, 0, 1]], dtype=float) / 4.0
_SOBEL_Y = _SOBEL_X.T


def canny_edges(image: np.ndarray, low: float = 0.1, high: float = 0.2,
                sigma: float = 1.4) -> np.ndarray:
    """Binary edge map of a grayscale raster. Thresholds apply to the gradient
    magnitude of the [0, 1]-normalized image."""
    img = np.asarray(image)
    if img.ndim != 2 or img.size == 0:
        raise ValueError("expected a non-empty 2-D grayscale image")
    if low >= high:
        raise ValueError(f"low threshold {low} must be < high threshold {high}")
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    img = img.astype(float)
    if img.max() > 1.0:
        img = img / 255.0

    smoothed = ndimage.gaussian_filter(img, sigma, mode="nearest")
    gx = ndimage.convolve(smoothed, _SOBEL_X, mode="nearest")
    gy = ndimage.convolve(smoothed, _SOBEL_Y, mode="nearest")
    mag = np.hypot(gx, gy)

    suppressed = _non_maximum_suppression(mag, gx, gy)
    strong = suppressed >= high
    weak = suppressed >= low
    return _hysteresis(strong, weak)


def _non_maximum_suppression(mag: np.ndarray, gx: np.ndarray, gy: np.ndarray) -> np.ndarray:
    """Keep pixels that are local maxima along the quantized gradient direction.

    Ties resolved by keeping the pixel whose forward neighbor is strictly
    smaller (>= backward, > forward), so a plateau keeps one pixel, not zero.
    """
    h, w = mag.shape
    padded = np.pad(mag, 1, mode="constant")
    angle = np.rad2deg(np.arctan2(gy, gx)) % 180.0
    # quantize to 0 / 45 / 90 / 135 degrees
    sector = ((angle + 22.5) // 45).astype(int) % 4
    offsets = {
        0: (0, 1),   # horizontal gradient: compare left/right
        1: (1, 1),   # diagonal
        2: (1, 0),   # vertical gradient: compare up/down
        3: (1, -1),  # anti-diagonal
    }
    out = np.zeros_like(mag)
    ys, xs = np.mgrid[0:h, 0:w]
    for s, (dy, dx) in offsets.items():
        m = sector == s
        back = padded[ys[m] + 1 - dy, xs[m] + 1 - dx]
        fwd = padded[ys[m] + 1 + dy, xs[m] + 1 + dx]
        keep = (mag[m] >= back) & (mag[m] > fwd)
        vals = np.where(keep, mag[m], 0.0)
        out[ys[m], xs[m]] = vals
    return out


def _hysteresis(strong: np.ndarray, weak: np.ndarray) -> np.ndarray:
    """Keep weak-edge components 8-connected to at least one strong pixel."""
    if not strong.any():
        return np.zeros(strong.shape, dtype=np.uint8)
    labels, n = ndimage.label(weak, structure=np.ones((3, 3), dtype=int))
    keep = np.zeros(n + 1, dtype=bool)
    keep[np.unique(labels[strong])] = True
    keep[0] = False
    return keep[labels].astype(np.uint8)

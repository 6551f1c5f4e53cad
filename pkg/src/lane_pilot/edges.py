"""Sobel gradients and the Canny edge detector."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .imaging import Frame

__all__ = ["GradientField", "sobel_gradients", "non_max_suppression", "hysteresis", "canny"]

_EIGHT_CONNECTED = np.ones((3, 3), dtype=bool)


@dataclass(frozen=True, eq=False)
class GradientField:
    gx: np.ndarray
    gy: np.ndarray
    magnitude: np.ndarray

    @property
    def height(self) -> int:
        return self.gx.shape[0]

    @property
    def width(self) -> int:
        return self.gx.shape[1]


def sobel_gradients(gray: Frame) -> GradientField:
    """3x3 Sobel responses (y axis pointing down) with replicated borders."""
    if gray.channels != 1:
        raise ValueError("sobel_gradients needs a 1-channel frame")
    if gray.width < 3 or gray.height < 3:
        raise ValueError("image must be at least 3x3 for Sobel gradients")
    p = np.pad(gray.data.astype(np.int32), 1, mode="edge")
    h, w = gray.height, gray.width

    def at(dy, dx):
        return p[1 + dy : 1 + dy + h, 1 + dx : 1 + dx + w]

    gx = (at(-1, 1) - at(-1, -1)) + 2 * (at(0, 1) - at(0, -1)) + (at(1, 1) - at(1, -1))
    gy = (at(1, -1) - at(-1, -1)) + 2 * (at(1, 0) - at(-1, 0)) + (at(1, 1) - at(-1, 1))
    sq = gx.astype(np.int64) ** 2 + gy.astype(np.int64) ** 2
    # sqrt of an integer is never exactly k + 0.5, so plain rounding has no ties.
    magnitude = np.rint(np.sqrt(sq.astype(np.float64))).astype(np.int32)
    return GradientField(gx=gx, gy=gy, magnitude=magnitude)


def direction_bins(gx: np.ndarray, gy: np.ndarray) -> np.ndarray:
    """Quantize gradient direction to 0/1/2/3 for 0, 45, 90 and 135 degrees."""
    angle = np.degrees(np.arctan2(gy, gx))
    angle = np.where(angle < 0, angle + 180.0, angle)
    angle = np.where(angle >= 180.0, angle - 180.0, angle)
    bins = np.zeros(angle.shape, dtype=np.int8)
    bins[(angle >= 22.5) & (angle < 67.5)] = 1
    bins[(angle >= 67.5) & (angle < 112.5)] = 2
    bins[(angle >= 112.5) & (angle < 157.5)] = 3
    return bins


# (dy, dx) of one neighbour along the gradient; the other is the negation.
_BIN_OFFSETS = ((0, 1), (1, 1), (1, 0), (1, -1))


def non_max_suppression(grad: GradientField) -> np.ndarray:
    """Pixels whose magnitude is >= both neighbours along the gradient (keep on tie)."""
    mag = grad.magnitude
    h, w = mag.shape
    bins = direction_bins(grad.gx, grad.gy)
    p = np.pad(mag, 1, mode="edge")
    keep = np.zeros(mag.shape, dtype=bool)
    for b, (dy, dx) in enumerate(_BIN_OFFSETS):
        fwd = p[1 + dy : 1 + dy + h, 1 + dx : 1 + dx + w]
        back = p[1 - dy : 1 - dy + h, 1 - dx : 1 - dx + w]
        keep |= (bins == b) & (mag >= fwd) & (mag >= back)
    return keep


def hysteresis(candidates: np.ndarray, strong: np.ndarray) -> np.ndarray:
    """Keep candidate pixels 8-connected to at least one strong pixel."""
    labels, count = ndimage.label(candidates, structure=_EIGHT_CONNECTED)
    if count == 0:
        return np.zeros(candidates.shape, dtype=bool)
    seeded = np.zeros(count + 1, dtype=bool)
    seeded[np.unique(labels[strong & candidates])] = True
    seeded[0] = False
    return seeded[labels]


def canny(gray: Frame, low: int = 50, high: int = 150) -> np.ndarray:
    """Canny edge mask of an already blurred gray frame."""
    if low <= 0 or low > high:
        raise ValueError(f"canny thresholds need 0 < low <= high, got {low}, {high}")
    grad = sobel_gradients(gray)
    thin = non_max_suppression(grad)
    candidates = thin & (grad.magnitude >= low)
    return hysteresis(candidates, candidates & (grad.magnitude >= high))

"""Raster types, netpbm IO and the pre-processing stages of the pipeline."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "Frame",
    "ImageParseError",
    "TruncatedImageError",
    "MalformedHeaderError",
    "UnsupportedMaxvalError",
    "decode_image",
    "encode_image",
    "to_grayscale",
    "crop_bottom_half",
    "band_threshold",
    "gaussian_kernel",
    "gaussian_blur",
]

LUMA_WEIGHTS = (0.299, 0.587, 0.114)


class ImageParseError(ValueError):
    pass


class MalformedHeaderError(ImageParseError):
    pass


class TruncatedImageError(ImageParseError):
    pass


class UnsupportedMaxvalError(ImageParseError):
    pass


@dataclass(frozen=True, eq=False)
class Frame:
    """An 8-bit raster, shape (height, width) for gray or (height, width, 3) for RGB."""

    data: np.ndarray

    def __post_init__(self):
        data = np.asarray(self.data)
        if data.dtype != np.uint8:
            if data.size and (data.min() < 0 or data.max() > 255):
                raise ValueError("intensities must lie in [0, 255]")
            data = data.astype(np.uint8)
        if data.ndim == 3 and data.shape[2] == 1:
            data = data[:, :, 0]
        if not (data.ndim == 2 or (data.ndim == 3 and data.shape[2] == 3)):
            raise ValueError(f"unsupported frame shape {data.shape}")
        if data.shape[0] < 1 or data.shape[1] < 1:
            raise ValueError("frame must have positive width and height")
        object.__setattr__(self, "data", data)

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def channels(self) -> int:
        return 1 if self.data.ndim == 2 else 3

    def __eq__(self, other):
        if not isinstance(other, Frame):
            return NotImplemented
        return self.data.shape == other.data.shape and bool(np.array_equal(self.data, other.data))

    def mirrored(self) -> Frame:
        return Frame(self.data[:, ::-1].copy())


def _read_token(buf: bytes, pos: int) -> tuple[bytes, int]:
    n = len(buf)
    while pos < n:
        c = buf[pos : pos + 1]
        if c == b"#":
            while pos < n and buf[pos : pos + 1] not in (b"\n", b"\r"):
                pos += 1
        elif c.isspace():
            pos += 1
        else:
            break
    start = pos
    while pos < n and not buf[pos : pos + 1].isspace() and buf[pos : pos + 1] != b"#":
        pos += 1
    if start == pos:
        raise MalformedHeaderError("unexpected end of header")
    return buf[start:pos], pos


def decode_image(buf: bytes) -> Frame:
    """Parse a binary PGM (P5) or PPM (P6) file with maxval 255."""
    if len(buf) < 2 or buf[:2] not in (b"P5", b"P6"):
        raise MalformedHeaderError("expected magic P5 or P6")
    channels = 1 if buf[:2] == b"P5" else 3
    pos = 2
    fields = []
    for _ in range(3):
        tok, pos = _read_token(buf, pos)
        if not tok.isdigit():
            raise MalformedHeaderError(f"non-numeric header field {tok!r}")
        fields.append(int(tok))
    width, height, maxval = fields
    if width < 1 or height < 1:
        raise MalformedHeaderError("width and height must be positive")
    if maxval != 255:
        raise UnsupportedMaxvalError(f"maxval {maxval} unsupported, expected 255")
    if pos >= len(buf) or not buf[pos : pos + 1].isspace():
        raise MalformedHeaderError("missing whitespace after maxval")
    pos += 1
    expected = width * height * channels
    payload = buf[pos : pos + expected]
    if len(payload) < expected:
        raise TruncatedImageError(f"payload has {len(payload)} bytes, expected {expected}")
    data = np.frombuffer(payload, dtype=np.uint8)
    shape = (height, width) if channels == 1 else (height, width, 3)
    return Frame(data.reshape(shape).copy())


def encode_image(frame: Frame) -> bytes:
    magic = b"P5" if frame.channels == 1 else b"P6"
    header = b"%s\n%d %d\n255\n" % (magic, frame.width, frame.height)
    return header + np.ascontiguousarray(frame.data).tobytes()


def _round_half_up(values: np.ndarray) -> np.ndarray:
    return np.floor(values + 0.5)


def to_grayscale(frame: Frame) -> Frame:
    if frame.channels != 3:
        raise ValueError(f"to_grayscale needs a 3-channel frame, got {frame.channels}")
    rgb = frame.data.astype(np.float64)
    r, g, b = LUMA_WEIGHTS
    luma = r * rgb[:, :, 0] + g * rgb[:, :, 1] + b * rgb[:, :, 2]
    return Frame(np.clip(_round_half_up(luma), 0, 255).astype(np.uint8))


def crop_bottom_half(frame: Frame) -> Frame:
    """Keep the lower ceil(h/2) rows, where the road is for a forward camera."""
    if frame.height < 2:
        raise ValueError("crop_bottom_half needs at least 2 rows")
    out_height = math.ceil(frame.height / 2)
    return Frame(frame.data[frame.height - out_height :].copy())


def band_threshold(gray: Frame, lo: int, hi: int) -> np.ndarray:
    """Boolean mask of pixels with lo <= value <= hi."""
    if gray.channels != 1:
        raise ValueError("band_threshold needs a 1-channel frame")
    if not (0 <= lo <= hi <= 255):
        raise ValueError(f"invalid band [{lo}, {hi}]")
    return (gray.data >= lo) & (gray.data <= hi)


def gaussian_kernel(radius: int, sigma: float) -> np.ndarray:
    if radius < 1 or sigma <= 0:
        raise ValueError("gaussian kernel needs radius >= 1 and sigma > 0")
    offsets = np.arange(-radius, radius + 1, dtype=np.float64)
    weights = np.exp(-(offsets**2) / (2.0 * sigma**2))
    return weights / weights.sum()


def _blur_axis(img: np.ndarray, kernel: np.ndarray, axis: int) -> np.ndarray:
    radius = len(kernel) // 2
    pad = [(0, 0), (0, 0)]
    pad[axis] = (radius, radius)
    padded = np.pad(img, pad, mode="edge")
    n = img.shape[axis]

    def window(offset):
        sl = [slice(None), slice(None)]
        sl[axis] = slice(radius + offset, radius + offset + n)
        return padded[tuple(sl)]

    # Mirror-symmetric tap pairs keep the result exactly invariant under flips.
    out = kernel[radius] * window(0)
    for k in range(1, radius + 1):
        out = out + kernel[radius + k] * (window(-k) + window(k))
    return out


def gaussian_blur(gray: Frame, radius: int = 2, sigma: float = 1.4) -> Frame:
    """Separable Gaussian blur with edge replication, rounded to integers."""
    if gray.channels != 1:
        raise ValueError("gaussian_blur needs a 1-channel frame")
    kernel = gaussian_kernel(radius, sigma)
    img = gray.data.astype(np.float64)
    out = _blur_axis(_blur_axis(img, kernel, axis=1), kernel, axis=0)
    return Frame(np.clip(_round_half_up(out), 0, 255).astype(np.uint8))

"""Hough voting, deterministic segment extraction and guide-line aggregation.

Segment and guide-line coordinates are continuous image coordinates: pixel
``(col, row)`` covers ``[col, col + 1) x [row, row + 1)`` so its centre is at
``(col + 0.5, row + 0.5)``.  With this convention mirroring a frame maps
``x -> width - x`` exactly.

The Hough accumulator measures rho from ``(width / 2, 0)``, the top-centre of
the frame, with pixel centres as the voting points.  Mirroring a frame then
maps ``(rho, theta) -> (rho, 180 - theta)`` exactly, so the accumulator,
peaks and segments are all mirror-equivariant.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .imaging import Frame

__all__ = [
    "HoughAccumulator",
    "Segment",
    "GuideLine",
    "GuidePair",
    "hough_accumulate",
    "find_peaks",
    "extract_segments",
    "aggregate_guides",
    "draw_overlay",
]

# Stand-in slope for perfectly vertical segments; the sign is taken from the
# side of the frame the segment lies on.
VERTICAL_SLOPE = 1.0e4


@dataclass(frozen=True)
class HoughAccumulator:
    votes: np.ndarray  # (rho_bins, theta_bins)
    rho_resolution: float
    theta_resolution: float
    rho_max: float  # D, half-range covered by the rho axis
    center_x: float = 0.0  # x of the rho origin, in continuous image coordinates

    @property
    def rho_bins(self) -> int:
        return self.votes.shape[0]

    @property
    def theta_bins(self) -> int:
        return self.votes.shape[1]

    @property
    def rho_offset(self) -> int:
        """Index of the bin covering [0, rho_resolution)."""
        return self.rho_bins // 2

    def rho_index(self, rho: float) -> int:
        return math.floor(rho / self.rho_resolution) + self.rho_offset

    def line_rho(self, x: float, y: float, theta_deg: float) -> float:
        """rho of the line through continuous point (x, y) at angle theta."""
        t = math.radians(theta_deg)
        return (x - self.center_x) * math.cos(t) + y * math.sin(t)

    def rho_of(self, rho_index) -> float:
        """Bin centre; bins are centred on half-multiples of the resolution."""
        return (rho_index - self.rho_offset + 0.5) * self.rho_resolution

    def theta_of(self, theta_index) -> float:
        """Bin centre in degrees."""
        return theta_index * self.theta_resolution


@dataclass(frozen=True)
class Segment:
    x1: float
    y1: float
    x2: float
    y2: float
    # generating Hough line (accumulator coordinates), when known
    rho: float = field(default=math.nan, compare=False)
    theta: float = field(default=math.nan, compare=False)  # degrees

    @property
    def length(self) -> float:
        return math.hypot(self.x2 - self.x1, self.y2 - self.y1)

    def mirrored(self, width: float) -> Segment:
        return Segment(width - self.x1, self.y1, width - self.x2, self.y2)


@dataclass(frozen=True)
class GuideLine:
    """Straight line y = slope * x + intercept in image coordinates."""

    slope: float
    intercept: float

    def x_at(self, y: float) -> float:
        return (y - self.intercept) / self.slope


@dataclass(frozen=True)
class GuidePair:
    left: Optional[GuideLine]
    right: Optional[GuideLine]
    guide_x: float


def _theta_bin_count(theta_res: float) -> int:
    n = 180.0 / theta_res if theta_res > 0 else 0.5
    if abs(n - round(n)) > 1e-9:
        raise ValueError(f"theta resolution {theta_res} must divide 180 evenly")
    return int(round(n))


def _trig_table(n_theta: int, theta_res: float) -> tuple[np.ndarray, np.ndarray]:
    """cos/sin of each theta bin with cos(180 - t) == -cos(t) and sin(180 - t) == sin(t) bit for bit."""
    angles = np.deg2rad(np.arange(n_theta) * theta_res)
    cos, sin = np.cos(angles), np.sin(angles)
    sin[0] = 0.0
    for j in range(1, n_theta):
        k = n_theta - j
        if k < j:
            cos[j], sin[j] = -cos[k], sin[k]
        elif k == j:
            cos[j] = 0.0
    return cos, sin


def _edge_points(edges: np.ndarray) -> tuple[np.ndarray, np.ndarray, float]:
    """Edge pixel centres relative to the accumulator origin, and that origin's x."""
    h, w = edges.shape
    ys, xs = np.nonzero(edges)
    center_x = w / 2
    return xs + 0.5 - center_x, ys + 0.5, center_x


def hough_accumulate(edges: np.ndarray, rho_res: float = 1.0, theta_res: float = 1.0) -> HoughAccumulator:
    """One vote per (edge pixel, theta bin) in the rho bin containing the pixel's rho.

    Bin edges sit on multiples of rho_res and the bin count is even, so the
    bins are symmetric about rho = 0 and a mirrored frame votes into
    mirrored bins.
    """
    if rho_res <= 0:
        raise ValueError("rho resolution must be positive")
    n_theta = _theta_bin_count(theta_res)
    h, w = edges.shape
    rho_max = math.hypot(w, h)
    half = int(math.ceil(rho_max / rho_res))
    n_rho = 2 * half
    xs, ys, center_x = _edge_points(edges)
    votes = np.zeros(n_rho * n_theta, dtype=np.int64)
    if len(xs):
        cos, sin = _trig_table(n_theta, theta_res)
        rho = np.outer(xs, cos) + np.outer(ys, sin)
        rho_idx = np.floor(rho / rho_res).astype(np.int64) + half
        flat = rho_idx * n_theta + np.arange(n_theta)
        votes = np.bincount(flat.ravel(), minlength=n_rho * n_theta)
    return HoughAccumulator(
        votes=votes.reshape(n_rho, n_theta),
        rho_resolution=float(rho_res),
        theta_resolution=float(theta_res),
        rho_max=rho_max,
        center_x=center_x,
    )


def find_peaks(acc: HoughAccumulator, vote_min: int) -> list[tuple[int, int]]:
    """Local maxima (3x3, keep on tie) with at least vote_min votes.

    The theta axis wraps: the column before theta = 0 is theta = 180 - res
    with rho negated.  Ordered by descending votes; ties go to the smaller
    rho bin and then to theta nearer 90 degrees, a key that a mirrored frame
    reproduces (theta -> 180 - theta, and rho -> -rho at theta = 0).  Any
    remaining tie (a peak and its own mirror image) falls back to ascending
    (rho_index, theta_index).
    """
    v = acc.votes
    h, w = v.shape
    wrapped = np.concatenate([v[::-1, -1:], v, v[::-1, :1]], axis=1)
    p = np.pad(wrapped, ((1, 1), (0, 0)), mode="constant", constant_values=-1)
    is_peak = v >= vote_min
    for dy in (-1, 0, 1):
        for dx in (-1, 0, 1):
            if dy or dx:
                is_peak &= v >= p[1 + dy : 1 + dy + h, 1 + dx : 1 + dx + w]
    ri, ti = np.nonzero(is_peak)
    rho_key = np.where(ti == 0, np.minimum(ri, h - 1 - ri), ri)
    theta_key = np.where(ti == 0, w, np.abs(2 * ti - w))
    order = np.lexsort((ti, ri, theta_key, rho_key, -v[ri, ti]))
    return [(int(ri[k]), int(ti[k])) for k in order]


def _fit_segment(cx: np.ndarray, cy: np.ndarray, direction: np.ndarray, rho: float, theta: float) -> Segment:
    """Principal-axis fit through pixel centres, clipped to the extreme projections."""
    mx, my = cx.mean(), cy.mean()
    dx, dy = cx - mx, cy - my
    cov = np.array([[np.dot(dx, dx), np.dot(dx, dy)], [np.dot(dx, dy), np.dot(dy, dy)]])
    _, vecs = np.linalg.eigh(cov)
    axis = vecs[:, 1]
    if np.dot(axis, direction) < 0:
        axis = -axis
    t = dx * axis[0] + dy * axis[1]
    t0, t1 = t.min(), t.max()
    return Segment(
        float(mx + t0 * axis[0]), float(my + t0 * axis[1]), float(mx + t1 * axis[0]), float(my + t1 * axis[1]), rho, theta
    )


def extract_segments(
    edges: np.ndarray,
    acc: HoughAccumulator,
    vote_min: int = 20,
    min_len: float = 10.0,
    max_gap: float = 4.0,
) -> list[Segment]:
    """Walk each accumulator peak's line, chaining unconsumed edge pixels into segments."""
    xs, ys, center_x = _edge_points(edges)
    if len(xs) == 0:
        return []
    cos, sin = _trig_table(acc.theta_bins, acc.theta_resolution)
    free = np.ones(len(xs), dtype=bool)
    segments = []
    band = acc.rho_resolution
    for ri, ti in find_peaks(acc, vote_min):
        if not free.any():
            break
        c, s = cos[ti], sin[ti]
        rho = acc.rho_of(ri)
        idx = np.nonzero(free & (np.abs(xs * c + ys * s - rho) <= band))[0]
        if len(idx) < 2:
            continue
        t = -xs[idx] * s + ys[idx] * c
        order = np.argsort(t, kind="stable")
        idx, t = idx[order], t[order]
        breaks = np.nonzero(np.diff(t) - 1.0 > max_gap)[0] + 1
        for run in np.split(np.arange(len(idx)), breaks):
            if len(run) < 2 or t[run[-1]] - t[run[0]] < min_len:
                continue
            members = idx[run]
            free[members] = False
            seg = _fit_segment(xs[members] + center_x, ys[members], np.array([-s, c]), rho, acc.theta_of(ti))
            segments.append(seg)
    return segments


def _segment_line(seg: Segment, frame_width: float) -> Optional[tuple[float, float]]:
    dx = seg.x2 - seg.x1
    dy = seg.y2 - seg.y1
    if dx == 0.0:
        side = seg.x1 - frame_width / 2
        if side == 0.0:
            return None
        slope = -VERTICAL_SLOPE if side < 0 else VERTICAL_SLOPE
    else:
        slope = dy / dx
    return slope, seg.y1 - slope * seg.x1


def _weighted_line(items: list[tuple[float, float, float]]) -> GuideLine:
    # Mean taken as first item + weighted deviations, so equal inputs come back bit-exact.
    s0, b0, _ = items[0]
    total = sum(w for _, _, w in items)
    slope = s0 + sum((s - s0) * w for s, _, w in items) / total
    intercept = b0 + sum((b - b0) * w for _, b, w in items) / total
    return GuideLine(slope, intercept)


def aggregate_guides(
    segments: list[Segment],
    frame_width: int,
    frame_height: int,
    lookahead_row: float,
    slope_min: float = 0.3,
    lane_width_frac: float = 0.25,
) -> Optional[GuidePair]:
    """Collapse segments into a left and a right guide line and an aim point.

    Left lines have negative image slope, right lines positive.  With a
    single cluster the aim point is shifted half a nominal lane width
    (``lane_width_frac * frame_width``) toward the lane centre.
    """
    if not 0 <= lookahead_row <= frame_height:
        raise ValueError("lookahead row outside the frame")
    left, right = [], []
    for seg in segments:
        length = seg.length
        if length <= 0:
            continue
        line = _segment_line(seg, frame_width)
        if line is None:
            continue
        slope, intercept = line
        if abs(slope) < slope_min:
            continue
        (left if slope < 0 else right).append((slope, intercept, length))
    if not left and not right:
        return None
    left_line = _weighted_line(left) if left else None
    right_line = _weighted_line(right) if right else None
    half_lane = 0.5 * lane_width_frac * frame_width
    if left_line and right_line:
        guide_x = 0.5 * (left_line.x_at(lookahead_row) + right_line.x_at(lookahead_row))
    elif left_line:
        guide_x = left_line.x_at(lookahead_row) + half_lane
    else:
        guide_x = right_line.x_at(lookahead_row) - half_lane
    return GuidePair(left_line, right_line, guide_x)


def _draw_line(img: np.ndarray, x1, y1, x2, y2, color) -> None:
    h, w = img.shape[:2]
    n = int(max(abs(x2 - x1), abs(y2 - y1))) + 2
    xs = np.floor(np.linspace(x1, x2, n)).astype(int)
    ys = np.floor(np.linspace(y1, y2, n)).astype(int)
    ok = (xs >= 0) & (xs < w) & (ys >= 0) & (ys < h)
    img[ys[ok], xs[ok]] = color


def draw_overlay(
    frame: Frame,
    segments: list[Segment],
    guides: Optional[GuidePair],
    lookahead_row: float,
    row_offset: int = 0,
) -> Frame:
    """RGB copy of ``frame`` with segments (red), guide lines (blue) and aim point (magenta).

    ``row_offset`` shifts the overlay when the geometry came from a cropped frame.
    """
    data = frame.data if frame.channels == 3 else np.repeat(frame.data[:, :, None], 3, axis=2)
    img = data.copy()
    for seg in segments:
        _draw_line(img, seg.x1, seg.y1 + row_offset, seg.x2, seg.y2 + row_offset, (255, 0, 0))
    if guides is not None:
        top, bottom = 0.0, float(frame.height - row_offset)
        for line in (guides.left, guides.right):
            if line is not None:
                _draw_line(img, line.x_at(top), top + row_offset, line.x_at(bottom), bottom + row_offset, (0, 0, 255))
        gy = lookahead_row + row_offset
        _draw_line(img, guides.guide_x - 3, gy, guides.guide_x + 3, gy, (255, 0, 255))
        _draw_line(img, guides.guide_x, gy - 3, guides.guide_x, gy + 3, (255, 0, 255))
    return Frame(img)

"""Flat-ground pinhole renderer for the synthetic camera."""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from ..imaging import Frame
from .kinematics import Pose
from .track import DASH_ON, DASH_PERIOD, YELLOW_WIDTH, Track

ROAD = (40, 40, 40)
WHITE = (255, 255, 255)
YELLOW = (255, 220, 0)
GRASS = (20, 60, 20)
SKY = (120, 170, 220)


@dataclass(frozen=True)
class CameraModel:
    height: float = 0.11  # metres above ground
    pitch: float = 0.35  # radians, downward
    horizontal_fov: float = 1.2
    width: int = 320
    image_height: int = 240

    def __post_init__(self):
        if not 0 < self.pitch < math.pi / 2:
            raise ValueError("pitch must lie in (0, pi/2)")
        if not 0 < self.horizontal_fov < math.pi:
            raise ValueError("horizontal fov must lie in (0, pi)")
        if self.width < 1 or self.image_height < 1 or self.height <= 0:
            raise ValueError("invalid camera dimensions")

    @property
    def focal(self) -> float:
        return (self.width / 2) / math.tan(self.horizontal_fov / 2)

    @property
    def horizon_row(self) -> float:
        """Continuous image row of the horizon; ground is visible strictly below it."""
        return self.image_height / 2 - self.focal * math.tan(self.pitch)

    def pixel_to_ground(self, u: float, v: float):
        """Vehicle-frame (forward, left) ground point seen at continuous pixel (u, v),
        or None above the horizon."""
        f = self.focal
        xr = (u - self.width / 2) / f
        yd = (v - self.image_height / 2) / f
        sp, cp = math.sin(self.pitch), math.cos(self.pitch)
        denom = sp + yd * cp
        if denom <= 0:
            return None
        t = self.height / denom
        return t * (cp - yd * sp), -t * xr

    def ground_to_pixel(self, forward: float, left: float):
        """Continuous pixel (u, v) of a vehicle-frame ground point in front of the camera."""
        sp, cp = math.sin(self.pitch), math.cos(self.pitch)
        # camera coordinates: depth along the optical axis, right, down
        depth = forward * cp + self.height * sp
        down = -forward * sp + self.height * cp
        if depth <= 0:
            raise ValueError("point is behind the camera")
        f = self.focal
        return self.width / 2 + f * (-left) / depth, self.image_height / 2 + f * down / depth


@lru_cache(maxsize=8)
def _ray_table(camera: CameraModel):
    """Ground intersection of every pixel centre's ray, in the vehicle frame."""
    f = camera.focal
    u = np.arange(camera.width) + 0.5
    v = np.arange(camera.image_height) + 0.5
    xr = (u - camera.width / 2) / f
    yd = (v - camera.image_height / 2) / f
    sp, cp = math.sin(camera.pitch), math.cos(camera.pitch)
    denom = sp + yd * cp
    ground_rows = np.nonzero(denom > 0)[0]
    t = camera.height / denom[ground_rows]
    forward = np.repeat((t * (cp - yd[ground_rows] * sp))[:, None], camera.width, axis=1)
    left = -t[:, None] * xr[None, :]
    return ground_rows, forward, left


@lru_cache(maxsize=8)
def _track_tables(track: Track):
    return track.cell_tables()


def sample_track(track: Track, x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """RGB appearance of the ground at world points (x, y)."""
    s = track.tile_size
    kind_grid, corner_x, corner_y = _track_tables(track)
    col = np.floor(x / s).astype(np.int64)
    row = np.floor(y / s).astype(np.int64)
    inside = (col >= 0) & (col < track.cols) & (row >= 0) & (row < track.rows)
    col_c = np.clip(col, 0, track.cols - 1)
    row_c = np.clip(row, 0, track.rows - 1)
    kind = np.where(inside, kind_grid[row_c, col_c], 0)

    # distance from the road middle and position along it, centred on the tile
    cx = (col_c + 0.5) * s
    cy = (row_c + 0.5) * s
    kx = corner_x[row_c, col_c]
    ky = corner_y[row_c, col_c]
    qx, qy = x - kx, y - ky
    mx, my = np.sign(cx - kx), np.sign(cy - ky)  # corner-to-centre diagonal
    arc_angle = np.arctan2(mx * qy - my * qx, mx * qx + my * qy)
    across = np.select([kind == 1, kind == 2], [y - cy, x - cx], np.hypot(qx, qy) - s / 2)
    along = np.select([kind == 1, kind == 2], [x - cx, y - cy], (s / 2) * arc_angle)
    across = np.abs(across)

    dash_phase = along - DASH_PERIOD * np.round(along / DASH_PERIOD)
    on_road = (kind > 0) & (across <= track.road_half_width)
    white = on_road & (across >= track.white_inner)
    yellow = on_road & (across <= YELLOW_WIDTH / 2) & (np.abs(dash_phase) < DASH_ON / 2)

    out = np.empty(x.shape + (3,), dtype=np.uint8)
    out[...] = GRASS
    out[on_road] = ROAD
    out[white] = WHITE
    out[yellow] = YELLOW
    return out


def render_frame(track: Track, pose: Pose, camera: CameraModel = CameraModel()) -> Frame:
    ground_rows, forward, left = _ray_table(camera)
    c, s = math.cos(pose.theta), math.sin(pose.theta)
    wx = pose.x + forward * c - left * s
    wy = pose.y + forward * s + left * c
    img = np.empty((camera.image_height, camera.width, 3), dtype=np.uint8)
    img[...] = SKY
    if len(ground_rows):
        img[ground_rows[0] :] = sample_track(track, wx, wy)
    return Frame(img)

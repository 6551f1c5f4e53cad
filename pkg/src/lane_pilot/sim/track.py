"""Tile-loop track geometry.

World frame: x east, y north, metres.  Tile ``(row, col)`` covers
``[col*s, (col+1)*s] x [row*s, (row+1)*s]``.  The road middle (yellow dashed
line) runs through tile centres; straights are straight and curves are
quarter circles of radius ``s/2`` about the tile corner shared by the two
connected sides.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .kinematics import Pose, normalize_angle

SIDES = {"N": (0, 1), "S": (0, -1), "E": (1, 0), "W": (-1, 0)}
_OPPOSITE = {"N": "S", "S": "N", "E": "W", "W": "E"}
_MIRROR = {"N": "N", "S": "S", "E": "W", "W": "E"}

YELLOW_WIDTH = 0.025
WHITE_WIDTH = 0.05
DASH_ON = 0.10
DASH_PERIOD = 0.20


@dataclass(frozen=True)
class Tile:
    row: int
    col: int
    kind: str  # straight_NS, straight_EW, curve_NE, curve_NW, curve_SE, curve_SW
    entry: str  # side the loop enters through
    exit: str  # side the loop leaves through

    @property
    def is_curve(self) -> bool:
        return self.kind.startswith("curve")


def _kind_for(a: str, b: str) -> str:
    pair = {a, b}
    if pair == {"N", "S"}:
        return "straight_NS"
    if pair == {"E", "W"}:
        return "straight_EW"
    ns = "N" if "N" in pair else "S"
    ew = "E" if "E" in pair else "W"
    return f"curve_{ns}{ew}"


def _side_towards(a: tuple[int, int], b: tuple[int, int]) -> str:
    dr, dc = b[0] - a[0], b[1] - a[1]
    for name, (dx, dy) in SIDES.items():
        if (dx, dy) == (dc, dr):
            return name
    raise ValueError(f"cells {a} and {b} are not 4-neighbours")


def tiles_from_cells(cells: list[tuple[int, int]]) -> tuple[Tile, ...]:
    """Build a closed loop of tiles from grid cells listed in travel order."""
    n = len(cells)
    if n < 4 or len(set(cells)) != n:
        raise ValueError("a loop needs at least 4 distinct cells")
    tiles = []
    for i, cell in enumerate(cells):
        prev_cell, next_cell = cells[i - 1], cells[(i + 1) % n]
        entry = _side_towards(cell, prev_cell)
        exit_ = _side_towards(cell, next_cell)
        tiles.append(Tile(cell[0], cell[1], _kind_for(entry, exit_), entry, exit_))
    return tuple(tiles)


@dataclass(frozen=True, eq=False)
class Track:
    tiles: tuple[Tile, ...]
    rows: int
    cols: int
    tile_size: float = 0.585
    lane_width: float = 0.22
    lane_side: int = 1  # +1 drive in the right lane, -1 in the left lane (mirrored world)
    _cell_index: dict = field(init=False, repr=False)

    def __post_init__(self):
        index = {}
        for i, t in enumerate(self.tiles):
            if not (0 <= t.row < self.rows and 0 <= t.col < self.cols):
                raise ValueError(f"tile {t} outside the {self.rows}x{self.cols} grid")
            index[(t.row, t.col)] = i
        object.__setattr__(self, "_cell_index", index)

    def __len__(self) -> int:
        return len(self.tiles)

    # Marking geometry, as distances from the road middle.
    @property
    def lane_center(self) -> float:
        return YELLOW_WIDTH / 2 + self.lane_width / 2

    @property
    def white_inner(self) -> float:
        return YELLOW_WIDTH / 2 + self.lane_width

    @property
    def road_half_width(self) -> float:
        return self.white_inner + WHITE_WIDTH

    def tile_at(self, x: float, y: float) -> Optional[int]:
        s = self.tile_size
        col, row = math.floor(x / s), math.floor(y / s)
        return self._cell_index.get((row, col))

    def in_bounds(self, x: float, y: float) -> bool:
        s = self.tile_size
        return 0 <= x < self.cols * s and 0 <= y < self.rows * s

    def tile_center(self, i: int) -> tuple[float, float]:
        t = self.tiles[i]
        s = self.tile_size
        return ((t.col + 0.5) * s, (t.row + 0.5) * s)

    def curve_corner(self, i: int) -> tuple[float, float]:
        t = self.tiles[i]
        s = self.tile_size
        ex, ey = SIDES[t.entry]
        xx, xy = SIDES[t.exit]
        return ((t.col + 0.5 + 0.5 * (ex + xx)) * s, (t.row + 0.5 + 0.5 * (ey + xy)) * s)

    def turn(self, i: int) -> int:
        """+1 for a left (counterclockwise) turn, -1 for right, 0 for straight."""
        t = self.tiles[i]
        if not t.is_curve:
            return 0
        ix, iy = SIDES[_OPPOSITE[t.entry]]
        ox, oy = SIDES[t.exit]
        return 1 if ix * oy - iy * ox > 0 else -1

    def lane_radius(self, i: int) -> float:
        """Radius of the driven lane's centre arc on a curve tile."""
        return self.tile_size / 2 + self.turn(i) * self.lane_side * self.lane_center

    @property
    def centerline_length(self) -> float:
        total = 0.0
        for i, t in enumerate(self.tiles):
            total += self.lane_radius(i) * math.pi / 2 if t.is_curve else self.tile_size
        return total

    def lane_frame(self, x: float, y: float, i: int) -> tuple[float, float, float]:
        """(left-positive distance from the road middle, lane tangent heading, signed curvature)
        at a point, using the travel direction through tile ``i``."""
        t = self.tiles[i]
        turn = self.turn(i)
        if turn == 0:
            ux, uy = SIDES[t.exit]
            cx, cy = self.tile_center(i)
            d_left = -uy * (x - cx) + ux * (y - cy)
            return d_left, math.atan2(uy, ux), 0.0
        kx, ky = self.curve_corner(i)
        qx, qy = x - kx, y - ky
        r = math.hypot(qx, qy)
        d_left = turn * (self.tile_size / 2 - r)
        heading = math.atan2(qy, qx) + turn * math.pi / 2
        return d_left, normalize_angle(heading), turn / self.lane_radius(i)

    def lane_offset(self, pose: Pose, i: int) -> float:
        d_left, _, _ = self.lane_frame(pose.x, pose.y, i)
        return d_left + self.lane_side * self.lane_center

    def start_pose(self, i: int) -> Pose:
        """Pose on the driven lane's centre at the middle of straight tile ``i``."""
        t = self.tiles[i]
        if t.is_curve:
            raise ValueError(f"tile {i} is a curve; episodes start on straights")
        ux, uy = SIDES[t.exit]
        cx, cy = self.tile_center(i)
        lateral = -self.lane_side * self.lane_center
        return Pose(cx - uy * lateral, cy + ux * lateral, math.atan2(uy, ux))

    def straight_indices(self) -> list[int]:
        return [i for i, t in enumerate(self.tiles) if not t.is_curve]

    def mirrored(self) -> Track:
        """Reflection about the vertical grid axis: the loop runs the other way
        round and the vehicle keeps to the mirrored (left) lane."""
        tiles = []
        for t in self.tiles:
            entry, exit_ = _MIRROR[t.entry], _MIRROR[t.exit]
            tiles.append(Tile(t.row, self.cols - 1 - t.col, _kind_for(entry, exit_), entry, exit_))
        return Track(
            tuple(tiles),
            self.rows,
            self.cols,
            tile_size=self.tile_size,
            lane_width=self.lane_width,
            lane_side=-self.lane_side,
        )

    def mirror_pose(self, pose: Pose) -> Pose:
        return Pose(self.cols * self.tile_size - pose.x, pose.y, normalize_angle(math.pi - pose.theta))

    def cell_tables(self):
        """Per-grid-cell lookup arrays used by the vectorized renderer:
        kind code (0 none, 1 EW, 2 NS, 3 curve) and curve corner coordinates."""
        kind = np.zeros((self.rows, self.cols), dtype=np.int8)
        corner_x = np.zeros((self.rows, self.cols))
        corner_y = np.zeros((self.rows, self.cols))
        for i, t in enumerate(self.tiles):
            if t.kind == "straight_EW":
                kind[t.row, t.col] = 1
            elif t.kind == "straight_NS":
                kind[t.row, t.col] = 2
            else:
                kind[t.row, t.col] = 3
                corner_x[t.row, t.col], corner_y[t.row, t.col] = self.curve_corner(i)
        return kind, corner_x, corner_y


def ring_cells(rows: int, cols: int) -> list[tuple[int, int]]:
    """Outer ring of a rows x cols grid, counterclockwise from the south-west corner."""
    cells = [(0, c) for c in range(cols)]
    cells += [(r, cols - 1) for r in range(1, rows)]
    cells += [(rows - 1, c) for c in range(cols - 2, -1, -1)]
    cells += [(r, 0) for r in range(rows - 2, 0, -1)]
    return cells


def build_default_track(tile_size: float = 0.585, lane_width: float = 0.22) -> Track:
    """The 18-tile loop: outer ring of a 6-wide, 5-tall grid."""
    return Track(tiles_from_cells(ring_cells(5, 6)), rows=5, cols=6, tile_size=tile_size, lane_width=lane_width)

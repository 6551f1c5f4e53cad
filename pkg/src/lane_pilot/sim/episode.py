"""Closed-loop episodes: render, perceive, steer, actuate, integrate."""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional

from ..actuation import PidController, pid_step, wheel_speeds
from ..config import BenchConfig
from ..guidance import ControllerState, format_angle_log
from ..imaging import encode_image
from ..pipeline import overlay, perceive, steer
from .kinematics import Pose, step_kinematics
from .render import CameraModel, render_frame
from .track import Track

POSE_LOG_HEADER = "step,t,x,y,theta,offset,tile,in_lane"


@dataclass(frozen=True)
class LaneStatus:
    lateral_offset: float  # metres, positive left of the lane centre
    tile_index: Optional[int]
    in_lane: bool


@dataclass
class RunMetrics:
    survival: float
    tiles_traversed: int
    exit_tile: Optional[int] = None  # last track tile occupied before a lane exit
    steering: list[float] = field(default_factory=list, repr=False)


def lane_metrics(track: Track, pose: Pose, exit_margin: float = 0.03) -> LaneStatus:
    if not track.in_bounds(pose.x, pose.y):
        return LaneStatus(math.inf, None, False)
    i = track.tile_at(pose.x, pose.y)
    if i is None:
        return LaneStatus(math.inf, None, False)
    offset = track.lane_offset(pose, i)
    return LaneStatus(offset, i, abs(offset) <= track.lane_width / 2 + exit_margin)


def camera_from_config(cfg: BenchConfig) -> CameraModel:
    return CameraModel(cfg.camera_height, cfg.camera_pitch, cfg.camera_fov, cfg.image_width, cfg.image_height)


def oracle_steering(track: Track, pose: Pose, cfg: BenchConfig, tile: int) -> float:
    """Steering angle from ground-truth lane geometry (no vision)."""
    d_left, tangent, curvature = track.lane_frame(pose.x, pose.y, tile)
    offset = d_left + track.lane_side * track.lane_center
    heading_err = math.degrees(math.remainder(pose.theta - tangent, 2 * math.pi))
    feedforward = -cfg.speed * curvature / cfg.kp if cfg.kp else 0.0
    angle = 150.0 * offset + 1.5 * heading_err + feedforward
    return max(-cfg.max_steer, min(cfg.max_steer, angle))


class _VisionDriver:
    def __init__(self, cfg: BenchConfig, dump_dir: Optional[Path]):
        self.cfg = cfg
        self.state = ControllerState()
        self.dump_dir = dump_dir

    def __call__(self, step: int, frame) -> float:
        seen = perceive(frame, self.cfg)
        self.state, command = steer(self.state, seen.angle, self.cfg)
        if self.dump_dir is not None:
            (self.dump_dir / f"overlay_{step:06d}.ppm").write_bytes(encode_image(overlay(frame, seen)))
            with open(self.dump_dir / "angles.csv", "a") as fh:
                fh.write(format_angle_log(step, seen.angle, command, self.state.direction) + "\n")
        return command.angle


def run_episode(
    track: Track,
    start_tile: int,
    cfg: BenchConfig = BenchConfig(),
    *,
    dump_dir: Optional[Path] = None,
    controller: Optional[Callable[[int, Pose], float]] = None,
) -> RunMetrics:
    """Drive one episode from the middle of ``start_tile`` until a lane exit or the time cap.

    ``controller`` overrides ``cfg.controller`` with a callable of (step, pose)
    returning a steering angle in degrees.
    """
    if not 0 <= start_tile < len(track) or track.tiles[start_tile].is_curve:
        raise ValueError(f"start tile {start_tile} is not a straight tile of the track")
    camera = camera_from_config(cfg)
    dt = cfg.dt
    n_steps = int(round(cfg.episode_cap / dt))
    if dump_dir is not None:
        dump_dir = Path(dump_dir)
        dump_dir.mkdir(parents=True, exist_ok=True)
        (dump_dir / "angles.csv").write_text("")
        pose_log = open(dump_dir / "poses.csv", "w")
        pose_log.write(POSE_LOG_HEADER + "\n")
    vision = None
    if controller is None and cfg.controller == "vision":
        vision = _VisionDriver(cfg, dump_dir)

    pose = track.start_pose(start_tile)
    pid = PidController(cfg.kp, cfg.ki, cfg.kd, cfg.integral_limit)
    pending: deque[float] = deque()
    current = start_tile
    tiles = 1
    t = 0.0
    exit_tile = None
    log = []
    try:
        for step in range(n_steps):
            needs_frame = vision is not None or dump_dir is not None
            frame = render_frame(track, pose, camera) if needs_frame else None
            if dump_dir is not None:
                (dump_dir / f"frame_{step:06d}.ppm").write_bytes(encode_image(frame))
            if controller is not None:
                angle = controller(step, pose)
            elif vision is not None:
                angle = vision(step, frame)
            elif cfg.controller == "oracle":
                angle = oracle_steering(track, pose, cfg, current)
            else:
                angle = cfg.constant_steer
            log.append(angle)

            # steering computed from the frame d steps old
            pending.append(angle)
            applied = pending.popleft() if len(pending) > cfg.frame_delay else 0.0
            pid, omega = pid_step(pid, -applied, dt)
            wheels = wheel_speeds(cfg.speed, omega, cfg.wheelbase, cfg.v_max)
            pose = step_kinematics(pose, wheels, cfg.wheelbase, dt)
            t = (step + 1) * dt

            status = lane_metrics(track, pose, cfg.exit_margin)
            if dump_dir is not None:
                pose_log.write(
                    f"{step},{t:.6f},{pose.x:.6f},{pose.y:.6f},{pose.theta:.6f},"
                    f"{status.lateral_offset:.6f},{'' if status.tile_index is None else status.tile_index},"
                    f"{int(status.in_lane)}\n"
                )
            if status.tile_index is not None and status.tile_index != current:
                current = status.tile_index
                tiles += 1
            if not status.in_lane:
                exit_tile = current
                break
    finally:
        if dump_dir is not None:
            pose_log.close()
    return RunMetrics(survival=t, tiles_traversed=tiles, exit_tile=exit_tile, steering=log)

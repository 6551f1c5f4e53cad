"""Deviation angle and the direction-memory control logic."""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Optional

from .lines import GuidePair

__all__ = ["ControllerState", "SteeringCommand", "deviation_angle", "update_state", "format_angle_log"]


@dataclass(frozen=True)
class ControllerState:
    direction: int = 0  # -1 left, 0 straight, +1 right
    last_angle: float = 0.0
    frames_without_lane: int = 0

    def __post_init__(self):
        if self.direction not in (-1, 0, 1):
            raise ValueError(f"direction must be -1, 0 or +1, got {self.direction}")
        if self.frames_without_lane < 0:
            raise ValueError("frames_without_lane must be non-negative")


@dataclass(frozen=True)
class SteeringCommand:
    angle: float  # degrees, positive steers right


def deviation_angle(guides: GuidePair, frame_width: int, frame_height: int, lookahead_row: float) -> float:
    """Angle in degrees from the bottom-centre anchor to the aim point; positive to the right."""
    baseline = frame_height - lookahead_row
    if baseline <= 0:
        raise ValueError("lookahead row must lie above the bottom of the frame")
    return math.degrees(math.atan((guides.guide_x - frame_width / 2) / baseline))


def _sign(x: float) -> int:
    return (x > 0) - (x < 0)


def update_state(
    state: ControllerState,
    angle: Optional[float],
    *,
    deadband: float = 5.0,
    max_steer: float = 30.0,
    recovery_angle: float = 25.0,
    give_up_frames: int = 90,
) -> tuple[ControllerState, SteeringCommand]:
    """Advance the controller by one frame.

    With a detection the remembered direction becomes the sign of the angle
    (0 inside the deadband).  Without one the vehicle turns by
    ``recovery_angle`` toward the remembered direction, and drives straight
    once ``give_up_frames`` consecutive frames have been lost.
    """
    if angle is not None:
        steering = max(-max_steer, min(max_steer, angle))
        direction = _sign(angle) if abs(angle) > deadband else 0
        new_state = ControllerState(direction=direction, last_angle=angle, frames_without_lane=0)
        return new_state, SteeringCommand(steering)
    lost = state.frames_without_lane + 1
    new_state = replace(state, frames_without_lane=lost)
    if lost > give_up_frames:
        return new_state, SteeringCommand(0.0)
    steering = max(-max_steer, min(max_steer, state.direction * recovery_angle))
    return new_state, SteeringCommand(steering)


def format_angle_log(index: int, angle: Optional[float], command: Optional[SteeringCommand], direction: int) -> str:
    angle_txt = "NA" if angle is None else f"{angle:.3f}"
    steer_txt = "NA" if command is None else f"{command.angle:.3f}"
    return f"{index},{angle_txt},{steer_txt},{direction}"

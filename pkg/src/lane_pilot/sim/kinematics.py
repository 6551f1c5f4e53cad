"""Vehicle pose and exact differential-drive integration."""

from __future__ import annotations

import math
from dataclasses import dataclass

from ..actuation import WheelCommand

STRAIGHT_EPS = 1e-9


def normalize_angle(theta: float) -> float:
    """Wrap to (-pi, pi]."""
    wrapped = math.remainder(theta, 2 * math.pi)
    return math.pi if wrapped == -math.pi else wrapped


@dataclass(frozen=True)
class Pose:
    x: float
    y: float
    theta: float  # radians, counterclockwise from +x

    def __post_init__(self):
        object.__setattr__(self, "theta", normalize_angle(self.theta))


def step_kinematics(pose: Pose, wheels: WheelCommand, wheelbase: float, dt: float) -> Pose:
    """Integrate constant wheel speeds for ``dt`` seconds along the exact arc."""
    if dt <= 0:
        raise ValueError("dt must be positive")
    v = 0.5 * (wheels.left + wheels.right)
    omega = (wheels.right - wheels.left) / wheelbase
    if abs(omega) < STRAIGHT_EPS:
        return Pose(pose.x + v * dt * math.cos(pose.theta), pose.y + v * dt * math.sin(pose.theta), pose.theta)
    radius = v / omega
    theta1 = pose.theta + omega * dt
    return Pose(
        pose.x + radius * (math.sin(theta1) - math.sin(pose.theta)),
        pose.y - radius * (math.cos(theta1) - math.cos(pose.theta)),
        theta1,
    )

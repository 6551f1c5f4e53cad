"""PID smoothing of the steering angle and differential-drive wheel mapping."""

from __future__ import annotations

from dataclasses import dataclass, replace

__all__ = ["PidController", "WheelCommand", "pid_step", "wheel_speeds"]


@dataclass(frozen=True)
class PidController:
    kp: float = 0.05  # rad/s per degree
    ki: float = 0.0
    kd: float = 0.01
    integral_limit: float = 50.0  # degree-seconds
    integral: float = 0.0
    prev_error: float = 0.0

    def reset(self) -> PidController:
        return replace(self, integral=0.0, prev_error=0.0)


@dataclass(frozen=True)
class WheelCommand:
    left: float  # m/s
    right: float


def pid_step(pid: PidController, error: float, dt: float) -> tuple[PidController, float]:
    """One PID update; returns the new controller and the yaw-rate demand in rad/s."""
    if dt <= 0:
        raise ValueError("dt must be positive")
    lim = pid.integral_limit
    integral = min(lim, max(-lim, pid.integral + error * dt))
    derivative = (error - pid.prev_error) / dt
    output = pid.kp * error + pid.ki * integral + pid.kd * derivative
    return replace(pid, integral=integral, prev_error=error), output


def wheel_speeds(v: float, omega: float, wheelbase: float = 0.1, v_max: float = 0.5) -> WheelCommand:
    """Left/right wheel speeds for body speed ``v`` and yaw rate ``omega``.

    Saturation scales both wheels by one factor so the turning radius is kept.
    """
    if wheelbase <= 0:
        raise ValueError("wheelbase must be positive")
    left = v - omega * wheelbase / 2
    right = v + omega * wheelbase / 2
    peak = max(abs(left), abs(right))
    if peak > v_max:
        scale = v_max / peak
        left *= scale
        right *= scale
    return WheelCommand(left, right)

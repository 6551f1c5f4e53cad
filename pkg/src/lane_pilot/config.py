"""Flat ``key = value`` configuration covering every tunable of the pipeline."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, fields, replace
from pathlib import Path

CONTROLLERS = ("vision", "oracle", "constant")


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class BenchConfig:
    # imaging
    threshold_lo: int = 180
    threshold_hi: int = 245
    blur_radius: int = 2
    blur_sigma: float = 1.4
    # edges
    canny_low: int = 50
    canny_high: int = 150
    # lines
    rho_res: float = 1.0
    theta_res: float = 1.0
    vote_min: int = 20
    min_len: float = 25.0  # drops dash fragments seen head-on in curves
    max_gap: float = 4.0
    slope_min: float = 0.3
    lane_width_frac: float = 0.75  # lane width / frame width at the lookahead row for this camera
    lookahead_frac: float = 0.25
    # guidance
    deadband: float = 2.0
    max_steer: float = 30.0
    recovery_angle: float = 11.0  # about the steering a lane-centre arc needs
    give_up_frames: int = 90
    # actuation
    kp: float = 0.05
    ki: float = 0.0
    kd: float = 0.0  # a derivative term on frame-to-frame angle jumps destabilises at 30 fps
    integral_limit: float = 50.0
    speed: float = 0.22
    wheelbase: float = 0.1
    v_max: float = 0.5
    # sim
    tile_size: float = 0.585
    lane_width: float = 0.22
    exit_margin: float = 0.03
    camera_height: float = 0.11
    camera_pitch: float = 0.35
    camera_fov: float = 1.2
    image_width: int = 320
    image_height: int = 240
    fps: int = 30
    episode_cap: float = 60.0
    frame_delay: int = 0
    controller: str = "vision"
    constant_steer: float = 30.0
    # bench
    start_tiles: tuple[int, ...] = (1, 4, 8, 11, 15)
    out_csv: str = ""
    dump_frames: str = ""
    jobs: int = 1
    seed: int = 0  # reserved; the pipeline is deterministic

    def __post_init__(self):
        self.validate()

    @property
    def dt(self) -> float:
        return 1.0 / self.fps

    def validate(self) -> None:
        def need(ok, msg):
            if not ok:
                raise ConfigError(msg)

        need(0 <= self.threshold_lo <= self.threshold_hi <= 255, "need 0 <= threshold_lo <= threshold_hi <= 255")
        need(self.blur_radius >= 1 and self.blur_sigma > 0, "need blur_radius >= 1 and blur_sigma > 0")
        need(0 < self.canny_low <= self.canny_high, "need 0 < canny_low <= canny_high")
        need(self.rho_res > 0, "rho_res must be positive")
        n = 180.0 / self.theta_res if self.theta_res > 0 else math.nan
        need(self.theta_res > 0 and abs(n - round(n)) < 1e-9, "theta_res must divide 180 evenly")
        need(self.vote_min > 0 and self.min_len > 0 and self.max_gap > 0, "Hough segment parameters must be positive")
        need(self.slope_min >= 0 and self.lane_width_frac >= 0, "slope_min and lane_width_frac must be >= 0")
        need(0 <= self.lookahead_frac < 1, "lookahead_frac must lie in [0, 1)")
        need(self.deadband >= 0 and self.max_steer > 0 and self.recovery_angle >= 0, "invalid guidance angles")
        need(self.give_up_frames >= 0, "give_up_frames must be >= 0")
        need(self.integral_limit >= 0, "integral_limit must be >= 0")
        need(self.wheelbase > 0 and self.v_max > 0 and abs(self.speed) <= self.v_max, "invalid speeds/wheelbase")
        need(self.tile_size > 0 and 0 < self.lane_width < self.tile_size / 2, "invalid track dimensions")
        need(self.exit_margin >= 0, "exit_margin must be >= 0")
        need(self.camera_height > 0 and 0 < self.camera_pitch < math.pi / 2, "invalid camera pose")
        need(0 < self.camera_fov < math.pi, "camera_fov must lie in (0, pi)")
        need(self.image_width >= 3 and self.image_height >= 6, "image too small")
        need(self.fps > 0 and self.episode_cap > 0, "fps and episode_cap must be positive")
        need(self.frame_delay >= 0, "frame_delay must be >= 0")
        need(self.controller in CONTROLLERS, f"controller must be one of {CONTROLLERS}")
        need(len(self.start_tiles) >= 1, "start_tiles must not be empty")
        need(len(set(self.start_tiles)) == len(self.start_tiles), "start_tiles must be distinct")
        need(self.jobs >= 1, "jobs must be >= 1")

    def with_overrides(self, **kwargs) -> BenchConfig:
        unknown = set(kwargs) - {f.name for f in fields(self)}
        if unknown:
            raise ConfigError(f"unknown config keys: {', '.join(sorted(unknown))}")
        return replace(self, **kwargs)


def _parse_value(name: str, text: str, default):
    try:
        if isinstance(default, bool):
            return text.lower() in ("1", "true", "yes", "on")
        if isinstance(default, int):
            return int(text)
        if isinstance(default, float):
            return float(text)
        if isinstance(default, tuple):
            return tuple(int(p) for p in text.split(",") if p.strip())
        return text
    except ValueError:
        raise ConfigError(f"{name}: cannot parse {text!r}") from None


def _format_value(value) -> str:
    if isinstance(value, tuple):
        return ",".join(str(v) for v in value)
    return repr(value) if isinstance(value, float) else str(value)


def parse_config(text: str, base: BenchConfig | None = None) -> BenchConfig:
    base = base or BenchConfig()
    defaults = asdict(base)
    values = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value'")
        key, value = (p.strip() for p in line.split("=", 1))
        if key not in defaults:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        if key in values:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        values[key] = _parse_value(key, value, getattr(base, key))
    return replace(base, **values)


def load_config(path: str | Path) -> BenchConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return parse_config(text)


def dump_config(config: BenchConfig) -> str:
    lines = ["# lane-pilot configuration"]
    for f in fields(config):
        lines.append(f"{f.name} = {_format_value(getattr(config, f.name))}")
    return "\n".join(lines) + "\n"


DEFAULT_CONFIG = BenchConfig()

__all__ = ["BenchConfig", "ConfigError", "CONTROLLERS", "DEFAULT_CONFIG", "parse_config", "load_config", "dump_config"]

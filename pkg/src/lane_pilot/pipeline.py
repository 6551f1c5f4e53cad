"""Frame-to-steering composition of the perception and control stages."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .config import BenchConfig
from .edges import canny
from .guidance import ControllerState, SteeringCommand, deviation_angle, update_state
from .imaging import Frame, band_threshold, crop_bottom_half, gaussian_blur, to_grayscale
from .lines import GuidePair, Segment, aggregate_guides, draw_overlay, extract_segments, hough_accumulate


@dataclass
class Perception:
    cropped: Frame
    row_offset: int
    lookahead_row: float
    segments: list[Segment]
    guides: Optional[GuidePair]
    angle: Optional[float]


def lookahead_row(cropped_height: int, cfg: BenchConfig) -> float:
    return cfg.lookahead_frac * cropped_height


def preprocess(frame: Frame, cfg: BenchConfig) -> tuple[Frame, np.ndarray]:
    """Crop, convert to gray and isolate the centre marking; returns (cropped, mask)."""
    cropped = crop_bottom_half(frame)
    gray = to_grayscale(cropped) if cropped.channels == 3 else cropped
    return cropped, band_threshold(gray, cfg.threshold_lo, cfg.threshold_hi)


def mask_to_frame(mask: np.ndarray) -> Frame:
    return Frame(mask.astype(np.uint8) * 255)


def perceive(frame: Frame, cfg: BenchConfig) -> Perception:
    cropped, mask = preprocess(frame, cfg)
    blurred = gaussian_blur(mask_to_frame(mask), cfg.blur_radius, cfg.blur_sigma)
    edges = canny(blurred, cfg.canny_low, cfg.canny_high)
    acc = hough_accumulate(edges, cfg.rho_res, cfg.theta_res)
    segments = extract_segments(edges, acc, cfg.vote_min, cfg.min_len, cfg.max_gap)
    row = lookahead_row(cropped.height, cfg)
    guides = aggregate_guides(segments, cropped.width, cropped.height, row, cfg.slope_min, cfg.lane_width_frac)
    angle = None
    if guides is not None:
        angle = deviation_angle(guides, cropped.width, cropped.height, row)
    return Perception(cropped, frame.height - cropped.height, row, segments, guides, angle)


def steer(state: ControllerState, angle: Optional[float], cfg: BenchConfig) -> tuple[ControllerState, SteeringCommand]:
    return update_state(
        state,
        angle,
        deadband=cfg.deadband,
        max_steer=cfg.max_steer,
        recovery_angle=cfg.recovery_angle,
        give_up_frames=cfg.give_up_frames,
    )


def overlay(frame: Frame, seen: Perception) -> Frame:
    return draw_overlay(frame, seen.segments, seen.guides, seen.lookahead_row, row_offset=seen.row_offset)

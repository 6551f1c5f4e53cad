"""Five-episode benchmark, offline frame processing and pipeline profiling."""

from __future__ import annotations

import io
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, TextIO

import numpy as np

from .actuation import PidController, pid_step
from .config import BenchConfig, ConfigError
from .edges import canny
from .guidance import ControllerState, deviation_angle, format_angle_log
from .imaging import ImageParseError, decode_image, encode_image, gaussian_blur
from .lines import aggregate_guides, extract_segments, hough_accumulate
from .pipeline import lookahead_row, mask_to_frame, overlay, perceive, preprocess, steer
from .sim.episode import camera_from_config, run_episode
from .sim.render import render_frame
from .sim.track import Track, build_default_track

CSV_HEADER = "episode,start_tile,survival_s,tiles"
PROFILE_STAGES = ("preprocess", "blur", "canny", "hough", "aggregate", "guidance", "pid")


@dataclass(frozen=True)
class EpisodeRow:
    episode: int
    start_tile: int
    survival: float  # seconds, rounded to the reported precision
    tiles: int
    exit_tile: Optional[int] = None  # not part of the CSV; None when the episode hit the time cap


@dataclass(frozen=True)
class ScoreTable:
    rows: tuple[EpisodeRow, ...]

    @property
    def survival_sum(self) -> float:
        return round(sum(r.survival for r in self.rows), 1)

    @property
    def tiles_sum(self) -> int:
        return sum(r.tiles for r in self.rows)

    def to_csv(self) -> str:
        lines = [CSV_HEADER]
        lines += [f"{r.episode},{r.start_tile},{r.survival:.1f},{r.tiles}" for r in self.rows]
        lines.append(f"cumulative,,{self.survival_sum:.1f},{self.tiles_sum}")
        return "\n".join(lines) + "\n"

    def summary(self) -> str:
        """Score pairs in the ``survival/tiles`` style."""
        out = io.StringIO()
        for r in self.rows:
            out.write(f"episode {r.episode} (tile {r.start_tile:2d}): {r.survival:.1f}/{r.tiles}\n")
        out.write(f"cumulative: {self.survival_sum:.1f}/{self.tiles_sum}\n")
        return out.getvalue()


def track_from_config(cfg: BenchConfig) -> Track:
    return build_default_track(cfg.tile_size, cfg.lane_width)


def check_start_tiles(track: Track, start_tiles) -> None:
    if len(set(start_tiles)) != len(start_tiles):
        raise ConfigError(f"start tiles must be distinct: {start_tiles}")
    straights = set(track.straight_indices())
    bad = [t for t in start_tiles if t not in straights]
    if bad:
        raise ConfigError(f"start tiles {bad} are not straight tiles of the {len(track)}-tile loop")


def _episode(args) -> EpisodeRow:
    cfg, episode, start_tile = args
    dump = None
    if cfg.dump_frames:
        dump = Path(cfg.dump_frames) / f"episode_{episode}_tile_{start_tile}"
    metrics = run_episode(track_from_config(cfg), start_tile, cfg, dump_dir=dump)
    return EpisodeRow(episode, start_tile, round(metrics.survival, 1), metrics.tiles_traversed, metrics.exit_tile)


def run_benchmark(cfg: BenchConfig, out: Optional[TextIO] = None) -> ScoreTable:
    """One episode per start tile; rows keep config order whatever the worker scheduling."""
    check_start_tiles(track_from_config(cfg), cfg.start_tiles)
    jobs = [(cfg, k + 1, tile) for k, tile in enumerate(cfg.start_tiles)]
    if cfg.jobs > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=min(cfg.jobs, len(jobs))) as pool:
            rows = list(pool.map(_episode, jobs))
    else:
        rows = [_episode(j) for j in jobs]
    table = ScoreTable(tuple(rows))
    if out is not None:
        out.write(table.summary())
    if cfg.out_csv:
        Path(cfg.out_csv).write_text(table.to_csv())
    return table


def process_frames(
    input_dir: str | Path,
    cfg: BenchConfig,
    log_path: str | Path,
    overlay_dir: str | Path | None = None,
) -> int:
    """Run perception + guidance over every ``*.ppm``/``*.pgm`` in name order.

    Returns the number of frames that could not be read (their log lines say NA).
    """
    input_dir = Path(input_dir)
    if not input_dir.is_dir():
        raise FileNotFoundError(f"input directory {input_dir} does not exist")
    files = sorted(p for p in input_dir.iterdir() if p.suffix.lower() in (".ppm", ".pgm") and p.is_file())
    if not files:
        print(f"warning: no frames found in {input_dir}", file=sys.stderr)
    if overlay_dir is not None:
        overlay_dir = Path(overlay_dir)
        overlay_dir.mkdir(parents=True, exist_ok=True)
    state = ControllerState()
    failures = 0
    lines = []
    for index, path in enumerate(files):
        try:
            frame = decode_image(path.read_bytes())
        except (ImageParseError, OSError) as exc:
            print(f"warning: {path.name}: {exc}", file=sys.stderr)
            failures += 1
            lines.append(f"{index},NA,NA,NA")
            continue
        seen = perceive(frame, cfg)
        state, command = steer(state, seen.angle, cfg)
        lines.append(format_angle_log(index, seen.angle, command, state.direction))
        if overlay_dir is not None:
            (overlay_dir / f"overlay_{path.stem}.ppm").write_bytes(encode_image(overlay(frame, seen)))
    Path(log_path).write_text("".join(line + "\n" for line in lines))
    return failures


@dataclass(frozen=True)
class ProfileReport:
    stages: dict  # stage name -> (median seconds, p95 seconds)
    end_to_end: tuple[float, float]
    iterations: int

    @property
    def fps(self) -> float:
        return 1.0 / self.end_to_end[0]

    def format(self) -> str:
        lines = [f"{'stage':<12}{'median_ms':>12}{'p95_ms':>12}"]
        for name, (med, p95) in self.stages.items():
            lines.append(f"{name:<12}{med * 1e3:>12.3f}{p95 * 1e3:>12.3f}")
        med, p95 = self.end_to_end
        lines.append(f"{'end_to_end':<12}{med * 1e3:>12.3f}{p95 * 1e3:>12.3f}")
        lines.append(f"frames/second: {self.fps:.1f} ({self.iterations} iterations)")
        return "\n".join(lines) + "\n"


def representative_frame(cfg: BenchConfig):
    track = track_from_config(cfg)
    return render_frame(track, track.start_pose(track.straight_indices()[0]), camera_from_config(cfg))


def profile_pipeline(cfg: BenchConfig, iterations: int = 200, frame=None) -> ProfileReport:
    """Time each perception/control stage on one frame, ``iterations`` times."""
    if iterations < 1:
        raise ValueError("iterations must be >= 1")
    frame = representative_frame(cfg) if frame is None else frame
    clock = time.perf_counter
    samples = {name: [] for name in PROFILE_STAGES}
    total = []
    state = ControllerState()
    pid = PidController(cfg.kp, cfg.ki, cfg.kd, cfg.integral_limit)
    for _ in range(iterations):
        t0 = clock()
        cropped, mask = preprocess(frame, cfg)
        t1 = clock()
        blurred = gaussian_blur(mask_to_frame(mask), cfg.blur_radius, cfg.blur_sigma)
        t2 = clock()
        edges = canny(blurred, cfg.canny_low, cfg.canny_high)
        t3 = clock()
        acc = hough_accumulate(edges, cfg.rho_res, cfg.theta_res)
        segments = extract_segments(edges, acc, cfg.vote_min, cfg.min_len, cfg.max_gap)
        t4 = clock()
        row = lookahead_row(cropped.height, cfg)
        guides = aggregate_guides(segments, cropped.width, cropped.height, row, cfg.slope_min, cfg.lane_width_frac)
        t5 = clock()
        angle = None if guides is None else deviation_angle(guides, cropped.width, cropped.height, row)
        state, command = steer(state, angle, cfg)
        t6 = clock()
        pid, _ = pid_step(pid, -command.angle, cfg.dt)
        t7 = clock()
        stamps = (t0, t1, t2, t3, t4, t5, t6, t7)
        for k, name in enumerate(PROFILE_STAGES):
            samples[name].append(stamps[k + 1] - stamps[k])
        total.append(t7 - t0)

    def stats(values):
        return float(np.median(values)), float(np.percentile(values, 95))

    return ProfileReport({k: stats(v) for k, v in samples.items()}, stats(total), iterations)

import pytest

from lane_pilot import cli
from lane_pilot.bench import (
    PROFILE_STAGES,
    EpisodeRow,
    ScoreTable,
    process_frames,
    profile_pipeline,
    representative_frame,
    run_benchmark,
)
from lane_pilot.config import BenchConfig, ConfigError, dump_config, load_config, parse_config
from lane_pilot.imaging import encode_image
from lane_pilot.sim.render import render_frame
from lane_pilot.sim.track import build_default_track

# oracle episodes skip rendering, so the protocol runs in well under a second
FAST = BenchConfig(controller="oracle", episode_cap=3.0)


class TestConfig:
    def test_dump_round_trip(self):
        cfg = BenchConfig(kp=0.07, start_tiles=(2, 6), controller="oracle", out_csv="x.csv")
        assert parse_config(dump_config(cfg)) == cfg
        assert parse_config(dump_config(BenchConfig())) == BenchConfig()

    def test_comments_and_blanks(self):
        cfg = parse_config("# tuning\n\nkp = 0.1  # stronger\nstart_tiles = 1, 4\n")
        assert cfg.kp == 0.1 and cfg.start_tiles == (1, 4)

    @pytest.mark.parametrize(
        "text",
        ["kpp = 1", "kp = 1\nkp = 2", "kp 1", "vote_min = many", "canny_low = 200", "controller = joystick", "start_tiles = 1,1"],
    )
    def test_rejects(self, text):
        with pytest.raises(ConfigError):
            parse_config(text)

    def test_overrides(self):
        assert BenchConfig().with_overrides(kd=0.5).kd == 0.5
        with pytest.raises(ConfigError):
            BenchConfig().with_overrides(kdd=0.5)

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError):
            load_config(tmp_path / "nope.cfg")

    def test_dt(self):
        assert BenchConfig().dt == pytest.approx(1 / 30)


class TestScoreTable:
    def test_csv_layout(self):
        table = ScoreTable((EpisodeRow(1, 1, 12.3, 5), EpisodeRow(2, 4, 0.1, 1)))
        assert table.to_csv() == (
            "episode,start_tile,survival_s,tiles\n1,1,12.3,5\n2,4,0.1,1\ncumulative,,12.4,6\n"
        )
        assert table.summary().endswith("cumulative: 12.4/6\n")

    def test_default_protocol(self, tmp_path):
        out = tmp_path / "scores.csv"
        table = run_benchmark(FAST.with_overrides(out_csv=str(out)))
        lines = out.read_text().splitlines()
        assert len(lines) == 1 + 5 + 1
        assert lines[-1].startswith("cumulative,,")
        assert [r.start_tile for r in table.rows] == list(FAST.start_tiles)
        assert table.survival_sum == pytest.approx(sum(r.survival for r in table.rows), abs=1e-9)
        assert table.tiles_sum == sum(r.tiles for r in table.rows)

    def test_order_independent_totals(self):
        a = run_benchmark(FAST)
        b = run_benchmark(FAST.with_overrides(start_tiles=tuple(reversed(FAST.start_tiles))))
        assert (a.survival_sum, a.tiles_sum) == (b.survival_sum, b.tiles_sum)

    @pytest.mark.parametrize("tiles", [(1, 1), (0, 1), (1, 40)])
    def test_bad_start_tiles(self, tiles, tmp_path):
        out = tmp_path / "s.csv"
        with pytest.raises(ConfigError):
            run_benchmark(_unchecked(FAST, start_tiles=tiles, out_csv=str(out)))
        assert not out.exists()

    def test_parallel_matches_sequential(self, tmp_path):
        seq, par = tmp_path / "seq.csv", tmp_path / "par.csv"
        run_benchmark(FAST.with_overrides(out_csv=str(seq)))
        run_benchmark(FAST.with_overrides(out_csv=str(par), jobs=2))
        assert seq.read_bytes() == par.read_bytes()


def _unchecked(cfg, **changes):
    """Config with fields set past dataclass validation, to reach the benchmark's own checks."""
    values = {**cfg.__dict__, **changes}
    obj = object.__new__(BenchConfig)
    for k, v in values.items():
        object.__setattr__(obj, k, v)
    return obj


class TestProcessFrames:
    def centred_frame(self):
        track = build_default_track()
        return render_frame(track, track.start_pose(2))

    def test_empty_directory(self, tmp_path, capsys):
        (tmp_path / "in").mkdir()
        assert process_frames(tmp_path / "in", BenchConfig(), tmp_path / "log.csv") == 0
        assert (tmp_path / "log.csv").read_text() == ""
        assert "warning" in capsys.readouterr().err

    def test_straight_frame_near_zero(self, tmp_path):
        (tmp_path / "in").mkdir()
        (tmp_path / "in" / "f0.ppm").write_bytes(encode_image(self.centred_frame()))
        process_frames(tmp_path / "in", BenchConfig(), tmp_path / "log.csv")
        fields = (tmp_path / "log.csv").read_text().strip().split(",")
        assert fields[0] == "0" and abs(float(fields[1])) <= 2.0

    def test_overlays_and_bad_frames(self, tmp_path):
        src = tmp_path / "in"
        src.mkdir()
        frame = encode_image(self.centred_frame())
        for name in ("a.ppm", "b.ppm", "d.ppm"):
            (src / name).write_bytes(frame)
        (src / "c.ppm").write_bytes(b"P6\n4 4\n255\n\x00")  # truncated
        failures = process_frames(src, BenchConfig(), tmp_path / "log.csv", tmp_path / "ov")
        lines = (tmp_path / "log.csv").read_text().splitlines()
        assert failures == 1 and len(lines) == 4
        assert lines[2] == "2,NA,NA,NA"
        assert len(list((tmp_path / "ov").glob("*.ppm"))) == 3


class TestProfile:
    def test_single_iteration_has_all_stages(self):
        report = profile_pipeline(BenchConfig(), 1)
        for stage in ("blur", "canny", "hough", "aggregate", "guidance", "pid"):
            assert stage in report.stages
        assert set(report.stages) == set(PROFILE_STAGES)
        text = report.format()
        assert all(name in text for name in PROFILE_STAGES) and "frames/second" in text

    def test_stage_sum_bound(self):
        report = profile_pipeline(BenchConfig(), 15)
        assert sum(m for m, _ in report.stages.values()) <= report.end_to_end[0] * 1.1

    def test_larger_image_not_faster(self):
        small = BenchConfig()
        big = BenchConfig(image_width=640, image_height=480)
        t_small = profile_pipeline(small, 9, representative_frame(small)).end_to_end[0]
        t_big = profile_pipeline(big, 9, representative_frame(big)).end_to_end[0]
        assert t_big >= t_small

    def test_bad_iterations(self):
        with pytest.raises(ValueError):
            profile_pipeline(BenchConfig(), 0)


class TestCli:
    def test_dump_config(self, capsys):
        assert cli.main(["dump-config"]) == 0
        assert parse_config(capsys.readouterr().out) == BenchConfig()

    def test_run_is_deterministic(self, tmp_path, capsys):
        cfg = tmp_path / "fast.cfg"
        cfg.write_text("controller = oracle\nepisode_cap = 2.0\n")
        for name in ("a.csv", "b.csv"):
            assert cli.main(["run", "--config", str(cfg), "--out", str(tmp_path / name)]) == 0
        assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()
        assert "cumulative" in capsys.readouterr().out

    def test_config_error_exit(self, tmp_path, capsys):
        cfg = tmp_path / "bad.cfg"
        cfg.write_text("no_such_key = 1\n")
        assert cli.main(["run", "--config", str(cfg), "--out", str(tmp_path / "o.csv")]) == 1
        assert cli.main(["run", "--config", str(tmp_path / "missing.cfg")]) == 1

    def test_runtime_error_exit(self, tmp_path):
        assert cli.main(["process", "--input", str(tmp_path / "nowhere"), "--log", str(tmp_path / "l.csv")]) == 2

    def test_process_bad_frame_exit(self, tmp_path):
        (tmp_path / "in").mkdir()
        (tmp_path / "in" / "x.ppm").write_bytes(b"garbage")
        assert cli.main(["process", "--input", str(tmp_path / "in"), "--log", str(tmp_path / "l.csv")]) == 2

    def test_profile(self, capsys):
        assert cli.main(["profile", "--iterations", "2"]) == 0
        assert "frames/second" in capsys.readouterr().out

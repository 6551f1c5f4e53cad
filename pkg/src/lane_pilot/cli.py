"""``lane-pilot`` command line: run, process, profile, dump-config."""

from __future__ import annotations

import argparse
import sys

from .bench import process_frames, profile_pipeline, run_benchmark
from .config import DEFAULT_CONFIG, ConfigError, dump_config, load_config

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME = 0, 1, 2


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="lane-pilot", description="Classical lane following in a tile-track simulator.")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run the 5-episode benchmark")
    run.add_argument("--config", help="key = value config file (defaults when omitted)")
    run.add_argument("--out", help="CSV score table path")
    run.add_argument("--dump-frames", help="write frames, overlays and logs per episode into this directory")
    run.add_argument("--jobs", type=int, help="parallel episode workers")
    run.add_argument("--seed", type=int, help="reserved; the pipeline is deterministic")

    proc = sub.add_parser("process", help="run perception over a directory of PPM frames")
    proc.add_argument("--input", required=True)
    proc.add_argument("--log", required=True)
    proc.add_argument("--overlays")
    proc.add_argument("--config")

    prof = sub.add_parser("profile", help="time each pipeline stage")
    prof.add_argument("--iterations", type=int, default=200)
    prof.add_argument("--config")

    sub.add_parser("dump-config", help="print the default configuration")
    return parser


def _config(path):
    return load_config(path) if path else DEFAULT_CONFIG


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "dump-config":
            sys.stdout.write(dump_config(DEFAULT_CONFIG))
            return EXIT_OK
        cfg = _config(args.config)
        if args.command == "run":
            overrides = {}
            if args.out is not None:
                overrides["out_csv"] = args.out
            if args.dump_frames is not None:
                overrides["dump_frames"] = args.dump_frames
            if args.jobs is not None:
                overrides["jobs"] = args.jobs
            if args.seed is not None:
                overrides["seed"] = args.seed
            run_benchmark(cfg.with_overrides(**overrides), out=sys.stdout)
            return EXIT_OK
        if args.command == "process":
            failures = process_frames(args.input, cfg, args.log, args.overlays)
            return EXIT_RUNTIME if failures else EXIT_OK
        if args.command == "profile":
            if args.iterations < 1:
                raise ConfigError("--iterations must be >= 1")
            sys.stdout.write(profile_pipeline(cfg, args.iterations).format())
            return EXIT_OK
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())

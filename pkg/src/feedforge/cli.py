"""``feedforge`` command line: the whole pipeline or one stage at a time."""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from .config import load_config
from .errors import ConfigError, ConvergenceError, DataError, FeedforgeError
from .pipeline import STAGES, run_pipeline, run_stage

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DATA = 3
EXIT_TIMEOUT = 4
EXIT_NONCONVERGENCE = 5
EXIT_OTHER = 1


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="feedforge", description="Synthesize a radial feeder from street data.")
    sub = p.add_subparsers(dest="command", required=True)
    run = sub.add_parser("run", help="run every stage")
    run.add_argument("--config", required=True, type=Path)
    run.add_argument("--out", type=Path, help="output directory (default: output.dir from the config)")
    run.add_argument("--verbose", "-v", action="store_true", help="log per-stage wall time")
    for name in STAGES:
        s = sub.add_parser(name, help=f"run only the {name} stage")
        s.add_argument("--config", required=True, type=Path)
        if name != "ingest":
            s.add_argument("--in", dest="src", required=True, type=Path, help="directory with earlier intermediates")
        s.add_argument("--out", required=True, type=Path)
        s.add_argument("--verbose", "-v", action="store_true")
    return p


def _exit_code(exc: BaseException) -> int:
    if isinstance(exc, ConfigError):
        return EXIT_CONFIG
    if isinstance(exc, ConvergenceError):
        return EXIT_NONCONVERGENCE
    if isinstance(exc, DataError):
        return EXIT_DATA
    return EXIT_OTHER


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="feedforge: %(message)s", stream=sys.stderr)
    stage = args.command
    try:
        cfg = load_config(args.config)
        if stage == "run":
            out = args.out or cfg.resolve(cfg.raw["output"]["dir"])
            res = run_pipeline(cfg, out)
        else:
            src = getattr(args, "src", None) or args.out
            res = run_stage(stage, cfg, src, args.out)
    except FeedforgeError as exc:
        where = getattr(exc, "stage", None)
        label = f"{stage} (stage {where})" if where and where != stage else stage
        print(f"feedforge {label}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return _exit_code(exc)
    if res.text:
        print(res.text, end="")
    return EXIT_TIMEOUT if res.timed_out else EXIT_OK


if __name__ == "__main__":
    sys.exit(main())

"""Command line entry point: ``actionchain <command> ...``."""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from . import __version__
from . import io as aio
from .config import PipelineConfig
from .errors import ActionChainError
from .pipeline import run_pipeline, stage_chains, stage_ingest, stage_phases, stage_score, stage_segment
from .render import render_map
from .synth import parse_script, render_flow


def _common() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--config", type=Path, help="key = value config file")
    p.add_argument("--out", type=Path, required=True, help="output directory (or file for score/map)")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--jobs", type=int, default=1, help="worker processes for per-driver work")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def build_parser() -> argparse.ArgumentParser:
    common = _common()
    parser = argparse.ArgumentParser(prog="actionchain", description=__doc__)
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", parents=[common], help="NGSIM file -> trajectory store")
    p.add_argument("--input", type=Path, required=True)

    p = sub.add_parser("segment", parents=[common], help="trajectories -> per-variable trend timelines")
    p.add_argument("--trajectories", type=Path, required=True)

    p = sub.add_parser("phases", parents=[common], help="timelines -> Action phases and library")
    p.add_argument("--segments", type=Path, required=True)

    p = sub.add_parser("chains", parents=[common], help="phases -> transition model and Action-chains")
    p.add_argument("--phases", type=Path, required=True)
    p.add_argument("--library", type=Path, required=True)

    p = sub.add_parser("score", parents=[common], help="phases + model -> DH report (JSON)")
    p.add_argument("--phases", type=Path, required=True)
    p.add_argument("--model", type=Path, required=True)
    p.add_argument("--holdout", action="store_true", help="score each driver against a model without them")

    p = sub.add_parser("map", parents=[common], help="timeline file -> behaviour map SVG")
    p.add_argument("--segments", type=Path, required=True, help="a timeline_*.csv file or a directory of them")
    p.add_argument("--dt", type=float, default=None, help="seconds per frame (default: config ingest.dt_s)")

    p = sub.add_parser("synth", parents=[common], help="synth script -> trajectory store")
    p.add_argument("--script", type=Path, required=True)

    p = sub.add_parser("run", parents=[common], help="full pipeline")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--input", type=Path, help="NGSIM-format input file")
    src.add_argument("--trajectories", type=Path, help="existing trajectory store (skips parsing)")
    p.add_argument("--holdout", action="store_true")
    return parser


def _map(args, cfg: PipelineConfig) -> None:
    dt = args.dt if args.dt is not None else cfg.ingest.dt_s
    if args.segments.is_dir():
        for key, path in aio.list_keyed(args.segments, aio.TIMELINE_PREFIX):
            name = aio.trajectory_name(key, "map_").replace(".csv", ".svg")
            render_map(aio.read_timelines(path), args.out / name, dt, title=f"Driver {key[0]}")
    else:
        key = aio.parse_name(args.segments)
        render_map(aio.read_timelines(args.segments), args.out, dt, title=f"Driver {key[0]}")


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = PipelineConfig.load(args.config)
        if args.command == "ingest":
            stage_ingest(args.input, cfg, args.out)
        elif args.command == "segment":
            stage_segment(args.trajectories, cfg, args.out, args.jobs)
        elif args.command == "phases":
            stage_phases(args.segments, cfg, args.out)
        elif args.command == "chains":
            stage_chains(args.phases, args.library, cfg, args.out)
        elif args.command == "score":
            stage_score(args.phases, args.model, cfg, args.out, args.holdout)
        elif args.command == "map":
            _map(args, cfg)
        elif args.command == "synth":
            spec = parse_script(args.script.read_text(encoding="utf-8"), seed=args.seed)
            aio.write_trajectories(args.out / "synth.csv", render_flow(spec))
        elif args.command == "run":
            source = args.input if args.input is not None else args.trajectories
            manifest = run_pipeline(args.config, source, args.out, args.jobs,
                                    from_trajectories=args.input is None, holdout=args.holdout)
            print(f"wrote {len(manifest.outputs)} stages to {args.out}")
    except ActionChainError as exc:
        print(f"actionchain {args.command}: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())

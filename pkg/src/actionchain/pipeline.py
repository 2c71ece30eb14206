"""Stage functions and the end-to-end run.

Each stage reads the previous stage's files and writes its own, so any stage
can be re-run or inspected alone. ``run_pipeline`` chains them and writes a
manifest with digests of everything it produced.
"""

from __future__ import annotations

import json
import logging
import shutil
from collections import defaultdict
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

from . import __version__
from . import io as aio
from .chain import build_action_chains, estimate
from .config import PipelineConfig
from .errors import StageError
from .hetero import DriverScore, FlowStats, flow_stats, score_drivers
from .ingest import Trajectory, load_records, split_episodes
from .phase import build_library, extract_phases, format_key, top_k
from .render import render_histogram
from .segment import segment_trajectory

logger = logging.getLogger(__name__)

STAGES = ("ingest", "segment", "phases", "chains", "score", "report")


def _segment_one(args):
    traj, cfg = args
    return traj.key, segment_trajectory(traj, cfg.segmentation, cfg.ingest.smoothing_frames)


def _pmap(fn, items: Sequence, jobs: int):
    if jobs > 1 and len(items) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as ex:
            return list(ex.map(fn, items, chunksize=max(1, len(items) // (4 * jobs))))
    return [fn(x) for x in items]


def stage_ingest(input_path: Path, cfg: PipelineConfig, out_dir: Path) -> list[Path]:
    records = load_records(input_path, cfg.ingest)
    trajectories, summary = split_episodes(records, cfg.ingest)
    out_dir = Path(out_dir)
    return [
        aio.write_trajectories(out_dir / f"{cfg.flow_id}.csv", trajectories),
        aio.write_json(out_dir / "ingest_summary.json", summary.to_dict()),
    ]


def stage_segment(trajectories: Sequence[Trajectory] | Path, cfg: PipelineConfig, out_dir: Path,
                  jobs: int = 1) -> list[Path]:
    if not isinstance(trajectories, (list, tuple)):
        trajectories = aio.read_trajectory_dir(trajectories)
    results = _pmap(_segment_one, [(t, cfg) for t in trajectories], jobs)
    out_dir = Path(out_dir)
    return [aio.write_timelines(out_dir / aio.trajectory_name(key, aio.TIMELINE_PREFIX), tls)
            for key, tls in results]


def stage_phases(segment_dir: Path, cfg: PipelineConfig, out_dir: Path) -> list[Path]:
    out_dir = Path(out_dir)
    paths = []
    all_phases = []
    for key, path in aio.list_keyed(segment_dir, aio.TIMELINE_PREFIX):
        tls = aio.read_timelines(path)
        phases = extract_phases([tls[v] for v in tls], cfg.tau, cfg.eta, cfg.long_at_eta)
        all_phases.extend(phases)
        paths.append(aio.write_phases(out_dir / aio.trajectory_name(key, aio.PHASES_PREFIX), phases))
    library = build_library(all_phases, cfg.flow_id)
    paths.append(aio.write_library(out_dir / "library.csv", library))
    return paths


def stage_chains(phase_dir: Path, library_path: Path, cfg: PipelineConfig, out_dir: Path) -> list[Path]:
    sequences = aio.read_phase_dir(phase_dir)
    model = estimate(sequences.values(), alpha=cfg.smoothing_alpha)
    library = aio.read_library(library_path, cfg.flow_id)
    chains = build_action_chains(model, library)
    out_dir = Path(out_dir)
    return [*aio.write_model(out_dir, model), aio.write_chains(out_dir / "chains.csv", chains)]


def _by_driver(sequences: dict) -> dict[int, list]:
    out: dict[int, list] = defaultdict(list)
    for (driver, _start), seq in sorted(sequences.items()):
        out[driver].append(seq)
    return dict(out)


def _holdout_scores(by_driver: dict[int, list], cfg: PipelineConfig) -> list[DriverScore]:
    scores = []
    for driver in sorted(by_driver):
        own = [s for s in by_driver[driver] if len(s) >= 2]
        if not own:
            continue
        rest = [s for d, seqs in by_driver.items() if d != driver for s in seqs]
        model = estimate(rest, alpha=cfg.smoothing_alpha)
        chains = build_action_chains(model, build_library([k for s in rest for k in s]))
        scores.extend(score_drivers({driver: own}, model, chains))
    return scores


def score_report(phase_dir: Path, model_dir: Path, cfg: PipelineConfig, holdout: bool = False) -> dict:
    by_driver = _by_driver(aio.read_phase_dir(phase_dir))
    if holdout:
        scores = _holdout_scores(by_driver, cfg)
    else:
        model = aio.read_model(model_dir)
        chains = aio.read_chains(Path(model_dir) / "chains.csv")
        scores = score_drivers(by_driver, model, chains)
    stats = flow_stats(scores)
    return {
        "flow_id": cfg.flow_id,
        "holdout": holdout,
        "driver_scores": [s.to_dict() for s in scores],
        "flow_stats": stats.to_dict(),
        "transitions_skipped": sum(s.transitions_skipped for s in scores),
    }


def stage_score(phase_dir: Path, model_dir: Path, cfg: PipelineConfig, out_file: Path,
                holdout: bool = False) -> list[Path]:
    return [aio.write_json(Path(out_file), score_report(phase_dir, model_dir, cfg, holdout))]


@dataclass
class RunManifest:
    config: dict
    inputs: dict[str, str]
    outputs: dict[str, list[dict]] = field(default_factory=dict)
    tool_version: str = __version__

    def to_dict(self) -> dict:
        return {"tool": "actionchain", "tool_version": self.tool_version, "config": self.config,
                "inputs": self.inputs, "outputs": self.outputs}


def final_report(out: Path, cfg: PipelineConfig) -> dict:
    """Assemble the report purely from the stage files under ``out``."""
    library = aio.read_library(out / "phases" / "library.csv", cfg.flow_id)
    chains = aio.read_chains(out / "model" / "chains.csv")
    scores = json.loads((out / "scores.json").read_text(encoding="utf-8"))
    summary_path = out / "trajectories" / "ingest_summary.json"
    summary = json.loads(summary_path.read_text(encoding="utf-8")) if summary_path.exists() else None
    return {
        "flow_id": cfg.flow_id,
        "library_size": len(library),
        "library_total": library.total,
        "library_top10": [{"phase": format_key(k), "count": c} for k, c in top_k(library, 10)],
        "chains_top": [{"from": format_key(k), "to": format_key(e.successor), "jtp": e.jtp}
                       for k, e in chains.ordered()[:10]],
        "driver_scores": scores["driver_scores"],
        "flow_stats": scores["flow_stats"],
        "transitions_skipped": scores["transitions_skipped"],
        "ingest_summary": summary,
    }


def run_pipeline(config_path: Path | None, input_path: Path, out_dir: Path, jobs: int = 1,
                 from_trajectories: bool = False, holdout: bool = False) -> RunManifest:
    """ingest -> segment -> phases -> chains -> score -> report, all under ``out_dir``.

    With ``from_trajectories`` the input is an existing trajectory store (for
    example from ``synth``) and ingest is skipped. On failure every output
    written by this call is removed and a ``StageError`` names the stage.
    """
    cfg = PipelineConfig.load(config_path)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    inputs = {Path(input_path).name: aio.sha256(input_path) if Path(input_path).is_file() else "directory"}
    if config_path is not None:
        inputs[Path(config_path).name] = aio.sha256(config_path)
    manifest = RunManifest(config=cfg.to_mapping(), inputs=inputs)
    created = [out / name for name in ("trajectories", "segments", "phases", "model", "scores.json",
                                       "report.json", "histogram.svg", "manifest.json")]
    for p in created:
        if p.is_dir():
            shutil.rmtree(p)
        elif p.exists():
            p.unlink()

    def run_stage(name, fn, *args, **kw):
        logger.info("stage %s", name)
        try:
            paths = fn(*args, **kw)
        except Exception as exc:
            for p in created:
                if p.is_dir():
                    shutil.rmtree(p, ignore_errors=True)
                elif p.exists():
                    p.unlink()
            raise StageError(name, exc) from exc
        manifest.outputs[name] = [{"path": p.relative_to(out).as_posix(), "sha256": aio.sha256(p)}
                                  for p in paths]

    if from_trajectories:
        trajs = aio.read_trajectory_dir(input_path)
        run_stage("ingest", lambda: [aio.write_trajectories(out / "trajectories" / f"{cfg.flow_id}.csv", trajs)])
    else:
        run_stage("ingest", stage_ingest, input_path, cfg, out / "trajectories")
    run_stage("segment", stage_segment, out / "trajectories", cfg, out / "segments", jobs)
    run_stage("phases", stage_phases, out / "segments", cfg, out / "phases")
    run_stage("chains", stage_chains, out / "phases", out / "phases" / "library.csv", cfg, out / "model")
    run_stage("score", stage_score, out / "phases", out / "model", cfg, out / "scores.json", holdout)

    def report():
        rep = final_report(out, cfg)
        scores = [DriverScore(**d) for d in rep["driver_scores"]]
        fs = rep["flow_stats"]
        stats = FlowStats(fs["mu"], fs["sigma"], tuple(fs["outliers"]), fs["n_drivers"])
        return [aio.write_json(out / "report.json", rep), render_histogram(scores, stats, out / "histogram.svg")]

    run_stage("report", report)
    aio.write_json(out / "manifest.json", manifest.to_dict())
    return manifest

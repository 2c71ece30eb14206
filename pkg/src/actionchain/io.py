"""Line-oriented text formats for every intermediate artifact.

All writers are deterministic: fixed ordering, fixed float formatting, ``\\n``
line endings. Probabilities are written with ``repr`` so they read back
bit-identical.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import re
from collections import Counter
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from .chain import ActionChainTable, ChainEntry, TransitionModel
from .config import VARIABLES
from .errors import ActionChainError
from .ingest import Trajectory
from .phase import TIME_LABELS, ActionPhase, PhaseKey, PhaseLibrary, TimeLabel, format_key, parse_key
from .segment import Trend, TrendSegment, TrendTimeline

TIMELINE_PREFIX = "timeline_"
PHASES_PREFIX = "phases_"
_NAME_RE = re.compile(r"^(?:timeline|phases)_(\d+)_(-?\d+)\.csv$")


class FormatError(ActionChainError, ValueError):
    pass


def _write(path: Path, text: str) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)
    return path


def _csv_text(header: Sequence[str] | None, rows: Iterable[Sequence]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    if header is not None:
        w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def _read_csv(path: Path) -> list[list[str]]:
    with open(path, encoding="utf-8", newline="") as fh:
        return [row for row in csv.reader(fh) if row]


def sha256(path: str | Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def write_json(path: Path, payload) -> Path:
    return _write(path, json.dumps(payload, indent=2, sort_keys=False, ensure_ascii=False) + "\n")


def trajectory_name(key: tuple[int, int], prefix: str) -> str:
    return f"{prefix}{key[0]}_{key[1]}.csv"


def parse_name(path: Path) -> tuple[int, int]:
    m = _NAME_RE.match(Path(path).name)
    if not m:
        raise FormatError(f"unexpected file name {Path(path).name!r}")
    return int(m.group(1)), int(m.group(2))


def list_keyed(directory: Path, prefix: str) -> list[tuple[tuple[int, int], Path]]:
    """Files ``<prefix><driver>_<start>.csv`` in ``directory`` sorted numerically by key."""
    found = [(parse_name(p), p) for p in Path(directory).glob(f"{prefix}*.csv")]
    return sorted(found)


# trajectory store ---------------------------------------------------------

def write_trajectories(path: str | Path, trajectories: Sequence[Trajectory]) -> Path:
    """One block per trajectory: ``driver_id,episode_start,dt,length`` then ``t,v,a,d,dv`` rows."""
    lines = []
    for tr in sorted(trajectories, key=lambda t: t.key):
        lines.append(f"{tr.driver_id},{tr.episode_start},{tr.dt:.6f},{len(tr)}")
        t = np.arange(len(tr)) * tr.dt
        block = np.column_stack([t, tr.series])
        lines.extend(",".join(f"{x:.6f}" for x in row) for row in block)
    return _write(Path(path), "\n".join(lines) + ("\n" if lines else ""))


def read_trajectories(path: str | Path) -> list[Trajectory]:
    with open(path, encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    out = []
    i = 0
    while i < len(lines):
        head = lines[i].split(",")
        if len(head) != 4:
            raise FormatError(f"{path}:{i + 1}: expected trajectory header")
        driver, start, dt, n = int(head[0]), int(head[1]), float(head[2]), int(head[3])
        rows = lines[i + 1:i + 1 + n]
        if len(rows) != n:
            raise FormatError(f"{path}:{i + 1}: truncated block")
        data = np.array([[float(x) for x in r.split(",")] for r in rows]).reshape(n, 5)
        out.append(Trajectory(driver, start, dt, *(data[:, j] for j in range(1, 5))))
        i += 1 + n
    return out


def read_trajectory_dir(directory: str | Path) -> list[Trajectory]:
    directory = Path(directory)
    paths = [directory] if directory.is_file() else sorted(directory.glob("*.csv"))
    out = [t for p in paths for t in read_trajectories(p)]
    keys = [t.key for t in out]
    if len(set(keys)) != len(keys):
        raise FormatError("duplicate (driver_id, episode_start) across trajectory files")
    return sorted(out, key=lambda t: t.key)


# timelines ----------------------------------------------------------------

def write_timelines(path: Path, timelines: Mapping[str, TrendTimeline]) -> Path:
    rows = [(var, s.start, s.end, s.trend.value)
            for var in VARIABLES for s in timelines[var].segments]
    return _write(path, _csv_text(("variable", "start_frame", "end_frame", "trend"), rows))


def read_timelines(path: Path) -> dict[str, TrendTimeline]:
    rows = _read_csv(path)
    segs: dict[str, list[TrendSegment]] = {var: [] for var in VARIABLES}
    for row in rows[1:]:
        var, start, end, trend = row
        if var not in segs:
            raise FormatError(f"{path}: unknown variable {var!r}")
        segs[var].append(TrendSegment(int(start), int(end), Trend(trend)))
    return {var: TrendTimeline(var, tuple(s)) for var, s in segs.items()}


# phases and library -------------------------------------------------------

PHASE_HEADER = ("start_frame", "end_frame", "v_trend", "a_trend", "d_trend", "dv_trend", "time_label")


def write_phases(path: Path, phases: Sequence[ActionPhase]) -> Path:
    rows = [(p.start_frame, p.end_frame, *(t.value for t in p.key.state), p.key.time.value) for p in phases]
    return _write(path, _csv_text(PHASE_HEADER, rows))


def read_phases(path: Path) -> list[ActionPhase]:
    out = []
    for row in _read_csv(path)[1:]:
        state = tuple(Trend(x) for x in row[2:-1])
        out.append(ActionPhase(PhaseKey(state, TimeLabel(row[-1])), int(row[0]), int(row[1])))
    return out


def read_phase_dir(directory: Path) -> dict[tuple[int, int], list[PhaseKey]]:
    """Phase-key sequences of every trajectory, keyed by (driver_id, episode_start)."""
    return {key: [p.key for p in read_phases(p)] for key, p in list_keyed(directory, PHASES_PREFIX)}


def write_library(path: Path, library: PhaseLibrary) -> Path:
    return _write(path, _csv_text(("phase_key", "count"), [(format_key(k), c) for k, c in library.ordered()]))


def read_library(path: Path, flow_id: str = "flow") -> PhaseLibrary:
    counts = Counter({parse_key(k): int(c) for k, c in _read_csv(path)[1:]})
    return PhaseLibrary(counts, flow_id)


# model and chains ---------------------------------------------------------

def _state_text(state) -> str:
    return "(" + ",".join(str(t) for t in state) + ")"


def _parse_state(text: str) -> tuple[Trend, ...]:
    return tuple(Trend(x.strip()) for x in text.strip()[1:-1].split(","))


def _matrix_text(labels: Sequence[str], matrix: np.ndarray, fmt=repr) -> str:
    rows = [(lab, *(fmt(x) for x in row)) for lab, row in zip(labels, matrix.tolist())]
    return _csv_text(("from\\to", *labels), rows)


def _read_matrix(path: Path) -> tuple[list[str], np.ndarray]:
    rows = _read_csv(path)
    labels = rows[0][1:]
    if [r[0] for r in rows[1:]] != labels:
        raise FormatError(f"{path}: row and column labels differ")
    return labels, np.array([[float(x) for x in r[1:]] for r in rows[1:]], dtype=float).reshape(len(labels), len(labels))


def write_model(directory: Path, model: TransitionModel) -> list[Path]:
    directory = Path(directory)
    states = [_state_text(s) for s in model.states]
    times = [t.value for t in TIME_LABELS]
    return [
        _write(directory / "state_matrix.csv", _matrix_text(states, model.state_matrix)),
        _write(directory / "time_matrix.csv", _matrix_text(times, model.time_matrix)),
        _write(directory / "state_counts.csv", _matrix_text(states, model.state_counts, fmt=lambda x: str(int(x)))),
        _write(directory / "time_counts.csv", _matrix_text(times, model.time_counts, fmt=lambda x: str(int(x)))),
    ]


def read_model(directory: Path) -> TransitionModel:
    directory = Path(directory)
    states, sm = _read_matrix(directory / "state_matrix.csv")
    times, tm = _read_matrix(directory / "time_matrix.csv")
    if times != [t.value for t in TIME_LABELS]:
        raise FormatError("time matrix must be labelled lg, st")
    return TransitionModel.from_matrices([_parse_state(s) for s in states], sm, tm)


def write_chains(path: Path, chains: ActionChainTable) -> Path:
    rows = [(format_key(src), format_key(e.successor), repr(e.jtp)) for src, e in chains.ordered()]
    return _write(path, _csv_text(("from_key", "to_key", "jtp"), rows))


def read_chains(path: Path) -> ActionChainTable:
    table = ActionChainTable()
    for src, dst, jtp in _read_csv(path)[1:]:
        table[parse_key(src)] = ChainEntry(parse_key(dst), float(jtp))
    return table

"""NGSIM-style trajectory ingest: parse, join follower with leader, split into episodes."""

from __future__ import annotations

import logging
import re
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Iterable

import numpy as np
import pandas as pd

from .config import FEET_TO_METERS, VARIABLES, IngestConfig
from .errors import EmptyFile, MalformedRow, MissingColumn, WindowEven, WindowNonPositive

logger = logging.getLogger(__name__)

CANONICAL = ("vehicle_id", "frame_id", "velocity", "acceleration", "space_headway", "preceding_id")
_INT_COLS = ("vehicle_id", "frame_id", "preceding_id")


@dataclass(frozen=True)
class RawRecord:
    vehicle_id: int
    frame_id: int
    velocity: float
    acceleration: float
    space_headway: float
    preceding_id: int  # 0 = no leader


@dataclass(eq=False)
class Trajectory:
    """One continuous single-leader car-following episode of a driver."""

    driver_id: int
    episode_start: int  # frame id of the first sample
    dt: float
    v: np.ndarray
    a: np.ndarray
    d: np.ndarray
    dv: np.ndarray  # leader velocity minus follower velocity

    def __post_init__(self):
        for var in VARIABLES:
            setattr(self, var, np.asarray(getattr(self, var), dtype=float))
        n = len(self.v)
        if any(len(getattr(self, var)) != n for var in VARIABLES):
            raise ValueError("all variables must have the same length")

    def __len__(self) -> int:
        return len(self.v)

    @property
    def key(self) -> tuple[int, int]:
        return (self.driver_id, self.episode_start)

    @property
    def duration(self) -> float:
        return len(self) * self.dt

    @property
    def series(self) -> np.ndarray:
        """(n, 4) array of v, a, d, dv."""
        return np.column_stack([getattr(self, var) for var in VARIABLES])

    def column(self, var: str) -> np.ndarray:
        if var not in VARIABLES:
            raise KeyError(var)
        return getattr(self, var)

    def equals(self, other: Trajectory) -> bool:
        return (self.key == other.key and self.dt == other.dt
                and np.array_equal(self.series, other.series))


@dataclass
class IngestSummary:
    records: int = 0
    vehicles: int = 0
    duplicates_dropped: int = 0
    frames_without_leader: int = 0
    episodes: int = 0
    episodes_kept: int = 0
    episodes_too_short: int = 0
    extra: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        d = asdict(self)
        d.update(d.pop("extra"))
        return d


def smooth(series, window_frames: int) -> np.ndarray:
    """Centered moving average; the window is truncated at the series ends."""
    if window_frames < 1:
        raise WindowNonPositive(f"window must be >= 1, got {window_frames}")
    if window_frames % 2 == 0:
        raise WindowEven(f"window must be odd, got {window_frames}")
    x = np.asarray(series, dtype=float)
    n = len(x)
    if window_frames == 1 or n == 0:
        return x.copy()
    half = window_frames // 2
    idx = np.arange(n)
    lo = np.clip(idx - half, 0, n)
    hi = np.clip(idx + half + 1, 0, n)
    # offsetting by x[0] keeps constant series exact
    c = np.concatenate(([0.0], np.cumsum(x - x[0])))
    return x[0] + (c[hi] - c[lo]) / (hi - lo)


def _resolve_columns(header: Iterable[str], cfg: IngestConfig) -> dict[str, str]:
    header = list(header)
    out = {}
    for name in CANONICAL:
        aliases = cfg.columns[name]
        hit = next((a for a in aliases if a in header), None)
        if hit is None:
            raise MissingColumn(aliases[0] if aliases else name)
        out[name] = hit
    return out


def load_records(path: str | Path, cfg: IngestConfig | None = None) -> pd.DataFrame:
    """Read a delimited trajectory file into a frame of canonical columns.

    Returns one row per record with columns ``CANONICAL``, unit-converted and
    sorted by ``(vehicle_id, frame_id)``. Repeated (vehicle, frame) rows keep
    their first occurrence; the count is stored in ``df.attrs["duplicates_dropped"]``.
    """
    cfg = cfg or IngestConfig()
    path = Path(path)
    with open(path, encoding="utf-8") as fh:
        first = fh.readline()
    if not first.strip():
        raise EmptyFile(str(path))
    sep = "," if "," in first else r"\s+"
    header = [h.strip() for h in re.split(sep, first.strip())]
    cols = _resolve_columns(header, cfg)
    usecols = sorted(set(cols.values()) | ({"Location"} if cfg.location and "Location" in header else set()))
    try:
        raw = pd.read_csv(path, sep=sep, usecols=usecols, dtype=str, engine="c" if sep == "," else "python",
                          skipinitialspace=True, keep_default_na=False)
    except pd.errors.ParserError as exc:
        m = re.search(r"line (\d+)", str(exc))
        raise MalformedRow(int(m.group(1)) if m else -1, str(exc)) from None
    if raw.empty:
        raise EmptyFile(str(path))
    if cfg.location and "Location" in raw.columns:
        raw = raw[raw["Location"].str.strip() == cfg.location]

    df = pd.DataFrame(index=raw.index)
    for name, src in cols.items():
        values = pd.to_numeric(raw[src].str.strip(), errors="coerce")
        if values.isna().any():
            line = int(np.flatnonzero(values.isna().to_numpy())[0])
            raise MalformedRow(int(raw.index[line]) + 2, f"non-numeric {src!r}")
        df[name] = values
    for name in _INT_COLS:
        if (df[name] != np.round(df[name])).any():
            line = int(np.flatnonzero((df[name] != np.round(df[name])).to_numpy())[0])
            raise MalformedRow(int(df.index[line]) + 2, f"non-integer {name}")
        df[name] = df[name].astype(np.int64)
    if cfg.unit_conversion == "feet_to_meters":
        for name in ("velocity", "acceleration", "space_headway"):
            df[name] = df[name] * FEET_TO_METERS
    bad = (df["velocity"] < 0) | ((df["preceding_id"] != 0) & (df["space_headway"] < 0))
    if bad.any():
        line = int(df.index[np.flatnonzero(bad.to_numpy())[0]]) + 2
        raise MalformedRow(line, "negative velocity or headway")

    df = df.sort_values(["vehicle_id", "frame_id"], kind="stable")
    n_before = len(df)
    df = df.drop_duplicates(["vehicle_id", "frame_id"], keep="first").reset_index(drop=True)
    df.attrs["duplicates_dropped"] = n_before - len(df)
    return df


def records_frame(records) -> pd.DataFrame:
    """Accept a canonical frame or an iterable of ``RawRecord`` and return a sorted frame."""
    if isinstance(records, pd.DataFrame):
        df = records
    else:
        df = pd.DataFrame([asdict(r) for r in records], columns=list(CANONICAL))
    return df.sort_values(["vehicle_id", "frame_id"], kind="stable").reset_index(drop=True)


def iter_records(df: pd.DataFrame) -> Iterable[RawRecord]:
    for row in df[list(CANONICAL)].itertuples(index=False):
        yield RawRecord(int(row[0]), int(row[1]), float(row[2]), float(row[3]), float(row[4]), int(row[5]))


def split_episodes(records, cfg: IngestConfig | None = None) -> tuple[list[Trajectory], IngestSummary]:
    """Cut each follower's frames into single-leader episodes and keep the long ones.

    An episode ends at a leader change, a missing frame, a frame without a
    leader, or a frame whose leader has no record at the same frame id.
    """
    cfg = cfg or IngestConfig()
    df = records_frame(records)
    summary = IngestSummary(records=len(df), vehicles=int(df["vehicle_id"].nunique()),
                            duplicates_dropped=int(df.attrs.get("duplicates_dropped", 0)))
    if df.empty:
        return [], summary

    leaders = df[["vehicle_id", "frame_id", "velocity"]].rename(
        columns={"vehicle_id": "preceding_id", "velocity": "leader_velocity"})
    df = df.merge(leaders, on=["preceding_id", "frame_id"], how="left", sort=False)

    veh = df["vehicle_id"].to_numpy()
    frame = df["frame_id"].to_numpy()
    lead = df["preceding_id"].to_numpy()
    vals = df[["velocity", "acceleration", "space_headway", "leader_velocity"]].to_numpy(dtype=float)
    valid = (lead != 0) & np.isfinite(vals).all(axis=1)
    summary.frames_without_leader = int((~valid).sum())

    brk = np.ones(len(df), dtype=bool)
    brk[1:] = ((veh[1:] != veh[:-1]) | (frame[1:] - frame[:-1] != 1)
               | (lead[1:] != lead[:-1]) | ~valid[:-1])
    episode = np.cumsum(brk)
    keep_rows = np.flatnonzero(valid)
    if keep_rows.size == 0:
        return [], summary
    ep = episode[keep_rows]
    starts = np.flatnonzero(np.r_[True, ep[1:] != ep[:-1]])
    ends = np.r_[starts[1:], len(ep)]
    summary.episodes = len(starts)

    out = []
    min_frames = cfg.min_frames
    for s, e in zip(starts, ends):
        if e - s < min_frames:
            summary.episodes_too_short += 1
            continue
        rows = keep_rows[s:e]
        v = vals[rows, 0]
        out.append(Trajectory(
            driver_id=int(veh[rows[0]]),
            episode_start=int(frame[rows[0]]),
            dt=cfg.dt_s,
            v=v,
            a=vals[rows, 1],
            d=vals[rows, 2],
            dv=vals[rows, 3] - v,
        ))
    summary.episodes_kept = len(out)
    out.sort(key=lambda t: t.key)
    logger.info("ingest: %d records -> %d trajectories", summary.records, len(out))
    return out, summary


def build_trajectories(records, cfg: IngestConfig | None = None) -> list[Trajectory]:
    return split_episodes(records, cfg)[0]

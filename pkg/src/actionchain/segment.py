"""Rule-based segmentation of a single variable into action trends.

The pipeline per variable is::

    turning points -> initial I/D/S labels -> merge short S -> S refined to H/L

Segments are half-open frame intervals ``[start, end)``.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Mapping, Sequence

import numpy as np

from .config import VARIABLES, SegmentationConfig
from .errors import SeriesTooShort

# relative tolerance below which a first difference counts as flat
FLAT_TOL = 1e-9


class Trend(str, Enum):
    I = "I"  # noqa: E741
    D = "D"
    S = "S"  # intermediate, gone after refine_stable
    H = "H"
    L = "L"

    def __str__(self) -> str:
        return self.value


@dataclass(frozen=True)
class TrendSegment:
    start: int
    end: int
    trend: Trend

    def __post_init__(self):
        if not self.start < self.end:
            raise ValueError(f"empty segment [{self.start}, {self.end})")

    @property
    def length(self) -> int:
        return self.end - self.start


@dataclass(frozen=True)
class TrendTimeline:
    variable: str
    segments: tuple[TrendSegment, ...]

    @property
    def length(self) -> int:
        return self.segments[-1].end if self.segments else 0

    def boundaries(self) -> list[int]:
        return [s.start for s in self.segments] + [self.length]

    def labels(self) -> list[Trend]:
        return [s.trend for s in self.segments]

    def per_frame(self) -> list[Trend]:
        """Trend label of every frame (the per-frame driving state for this variable)."""
        out: list[Trend] = []
        for s in self.segments:
            out.extend([s.trend] * s.length)
        return out


def _signs(x: np.ndarray) -> np.ndarray:
    d = np.diff(x)
    tol = FLAT_TOL * max(1.0, float(np.max(np.abs(x))))
    s = np.sign(d)
    s[np.abs(d) <= tol] = 0
    return s.astype(np.int8)


def find_turning_points(series, dt: float = 0.1) -> np.ndarray:
    """Frame indices where the tendency of ``series`` changes.

    A frame ``i`` is a turning point when the sign of the first difference
    entering it differs from the one leaving it. Sign flips between + and -
    are local extrema; flips to or from 0 are plateau edges, i.e. the frames
    where the second difference is non-zero next to a flat run. Frame 0 and
    the last frame are always included.
    """
    x = np.asarray(series, dtype=float)
    if x.ndim != 1 or len(x) < 3:
        raise SeriesTooShort(f"need at least 3 samples, got {x.size}")
    if not dt > 0:
        raise ValueError("dt must be > 0")
    s = _signs(x)
    interior = np.flatnonzero(s[1:] != s[:-1]) + 1
    return np.concatenate(([0], interior, [len(x) - 1])).astype(int)


def label_trends(series, turning_points, cfg: SegmentationConfig) -> list[TrendSegment]:
    """Initial I/D/S labels from the change between neighbouring turning points.

    The last turning point is the final frame; its segment extends to the end
    of the series so the output tiles ``[0, len(series))``.
    """
    x = np.asarray(series, dtype=float)
    tps = [int(t) for t in turning_points]
    n = len(x)
    if len(tps) < 2 or tps[0] != 0 or tps[-1] != n - 1:
        raise ValueError("turning points must start at 0 and end at the last frame")
    if any(b <= a for a, b in zip(tps, tps[1:])):
        raise ValueError("turning points must be strictly increasing")
    out = []
    for j, (a, b) in enumerate(zip(tps, tps[1:])):
        dy = x[b] - x[a]
        if dy > cfg.theta1:
            trend = Trend.I
        elif dy < cfg.theta2:
            trend = Trend.D
        else:
            trend = Trend.S
        end = n if j == len(tps) - 2 else b
        out.append(TrendSegment(a, end, trend))
    return out


def merge_short_stable(segments: Sequence[TrendSegment], gamma: int) -> list[TrendSegment]:
    """Absorb isolated short S segments into their right neighbour.

    An S segment shorter than ``gamma`` is merged only when it has a
    neighbour on both sides and both are longer than ``gamma``. Scans repeat
    until nothing changes.
    """
    segs = list(segments)
    changed = True
    while changed:
        changed = False
        i = 1
        while i < len(segs) - 1:
            s = segs[i]
            if (s.trend is Trend.S and s.length < gamma
                    and segs[i - 1].length > gamma and segs[i + 1].length > gamma):
                right = segs[i + 1]
                segs[i:i + 2] = [TrendSegment(s.start, right.end, right.trend)]
                changed = True
            i += 1
    return segs


def coalesce(segments: Sequence[TrendSegment]) -> list[TrendSegment]:
    out: list[TrendSegment] = []
    for s in segments:
        if out and out[-1].trend is s.trend:
            out[-1] = TrendSegment(out[-1].start, s.end, s.trend)
        else:
            out.append(s)
    return out


def refine_stable(segments: Sequence[TrendSegment], series, delta: float) -> list[TrendSegment]:
    """Relabel S as H (mean strictly above ``delta``) or L, then coalesce equal neighbours."""
    x = np.asarray(series, dtype=float)
    out = []
    for s in segments:
        if s.trend is Trend.S:
            high = float(np.mean(x[s.start:s.end])) > delta
            s = TrendSegment(s.start, s.end, Trend.H if high else Trend.L)
        out.append(s)
    return coalesce(out)


def segment_variable(series, dt: float, cfg: SegmentationConfig, variable: str = "v") -> TrendTimeline:
    x = np.asarray(series, dtype=float)
    tps = find_turning_points(x, dt)
    segs = label_trends(x, tps, cfg)
    segs = merge_short_stable(segs, cfg.gamma)
    segs = refine_stable(segs, x, cfg.delta)
    return TrendTimeline(variable, tuple(segs))


def segment_trajectory(traj, cfgs: Mapping[str, SegmentationConfig],
                       window_frames: int = 1) -> dict[str, TrendTimeline]:
    """Smooth each variable of a trajectory and segment it; keys follow ``VARIABLES``."""
    from .ingest import smooth

    out = {}
    for var in VARIABLES:
        x = smooth(traj.column(var), window_frames)
        out[var] = segment_variable(x, traj.dt, cfgs[var], var)
    return out

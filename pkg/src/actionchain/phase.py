"""Action phases: overlay per-variable timelines, drop short intervals, label durations."""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, NamedTuple, Sequence

from .errors import EmptyInput, TimelineMismatch
from .segment import Trend, TrendTimeline

FINAL_TRENDS = (Trend.I, Trend.D, Trend.H, Trend.L)


class TimeLabel(str, Enum):
    LONG = "lg"
    SHORT = "st"

    def __str__(self) -> str:
        return self.value


TIME_LABELS = (TimeLabel.LONG, TimeLabel.SHORT)


class PhaseKey(NamedTuple):
    state: tuple[Trend, ...]
    time: TimeLabel

    def text(self, spaced: bool = False) -> str:
        return format_key(self, spaced)


@dataclass(frozen=True)
class ActionPhase:
    key: PhaseKey
    start_frame: int
    end_frame: int

    @property
    def duration_frames(self) -> int:
        return self.end_frame - self.start_frame

    @property
    def state(self) -> tuple[Trend, ...]:
        return self.key.state


def time_label(duration: int, eta: int, long_at_eta: bool = True) -> TimeLabel:
    if duration > eta or (long_at_eta and duration == eta):
        return TimeLabel.LONG
    return TimeLabel.SHORT


def format_key(key: PhaseKey, spaced: bool = False) -> str:
    """``((L,L,H,H), st)``; ``spaced`` gives ``((L, L, H, H), st)``."""
    sep = ", " if spaced else ","
    return f"(({sep.join(str(t) for t in key.state)}), {key.time})"


def parse_key(text: str) -> PhaseKey:
    t = text.strip()
    try:
        inner, time = t[1:-1].rsplit(",", 1)
        labels = inner.strip()[1:-1].split(",")
        return PhaseKey(tuple(Trend(x.strip()) for x in labels), TimeLabel(time.strip()))
    except (ValueError, IndexError):
        raise ValueError(f"not a phase key: {text!r}") from None


def sort_key(key: PhaseKey) -> str:
    return format_key(key)


def atomic_intervals(timelines: Sequence[TrendTimeline]) -> list[tuple[int, int, tuple[Trend, ...]]]:
    """Split the common frame range at every variable's segment boundary.

    Neighbouring pieces with the same joint state are returned as one interval.
    """
    if not timelines:
        raise TimelineMismatch("no timelines")
    length = timelines[0].length
    if any(tl.length != length or not tl.segments or tl.segments[0].start != 0 for tl in timelines):
        raise TimelineMismatch("timelines cover different frame ranges")
    cuts = sorted(set().union(*(tl.boundaries() for tl in timelines)))
    pos = [0] * len(timelines)
    out = []
    for a, b in zip(cuts, cuts[1:]):
        state = []
        for i, tl in enumerate(timelines):
            while tl.segments[pos[i]].end <= a:
                pos[i] += 1
            state.append(tl.segments[pos[i]].trend)
        if out and out[-1][2] == tuple(state):
            out[-1] = (out[-1][0], b, out[-1][2])
        else:
            out.append((a, b, tuple(state)))
    return out


def extract_phases(timelines: Sequence[TrendTimeline], tau: int, eta: int,
                   long_at_eta: bool = True) -> list[ActionPhase]:
    """Action phases of one trajectory, in time order.

    Atomic intervals shorter than ``tau`` frames are dropped. Survivors that
    follow each other with the same state (only possible across a dropped
    interval) become one phase spanning both, dropped frames included.
    """
    kept = [iv for iv in atomic_intervals(timelines) if iv[1] - iv[0] >= tau]
    runs: list[list] = []
    for a, b, state in kept:
        if runs and runs[-1][2] == state:
            runs[-1][1] = b
        else:
            runs.append([a, b, state])
    return [ActionPhase(PhaseKey(state, time_label(b - a, eta, long_at_eta)), a, b)
            for a, b, state in runs]


@dataclass
class PhaseLibrary:
    """Frequency of every (state, time label) pair observed in one flow."""

    entries: Counter = field(default_factory=Counter)
    flow_id: str = "flow"

    @property
    def total(self) -> int:
        return sum(self.entries.values())

    def __len__(self) -> int:
        return len(self.entries)

    def __contains__(self, key) -> bool:
        return key in self.entries

    def count(self, key: PhaseKey) -> int:
        return self.entries.get(key, 0)

    def ordered(self) -> list[tuple[PhaseKey, int]]:
        """Entries by count descending, then key text ascending."""
        return sorted(self.entries.items(), key=lambda kv: (-kv[1], sort_key(kv[0])))

    def merge(self, other: PhaseLibrary) -> PhaseLibrary:
        return PhaseLibrary(self.entries + other.entries, self.flow_id)


def build_library(phases: Iterable[ActionPhase | PhaseKey], flow_id: str = "flow") -> PhaseLibrary:
    counts: Counter = Counter()
    for p in phases:
        counts[p.key if isinstance(p, ActionPhase) else p] += 1
    if not counts:
        raise EmptyInput("no phases to build a library from")
    return PhaseLibrary(counts, flow_id)


def top_k(library: PhaseLibrary, k: int) -> list[tuple[PhaseKey, int]]:
    if k < 1:
        raise ValueError("k must be >= 1")
    return library.ordered()[:k]


def library_bound(m: int) -> int:
    """Largest possible library size for ``m`` variables (4 trends each, 2 time labels)."""
    return len(TIME_LABELS) * len(FINAL_TRENDS) ** m


def format_top(entries: Sequence[tuple[PhaseKey, int]]) -> str:
    return "\n".join(f"{format_key(k)} {c}" for k, c in entries)

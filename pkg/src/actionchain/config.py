"""Configuration objects and the line-oriented ``key = value`` config format.

Keys are dotted, e.g.::

    flow_id = i80
    ingest.dt_s = 0.1
    ingest.column.preceding_id = Preceding|Preceeding
    segment.v.theta1 = 2
    phase.tau = 10

Blank lines and ``#`` comments are ignored.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, fields, replace
from pathlib import Path
from typing import Mapping

from .errors import ConfigError

VARIABLES: tuple[str, ...] = ("v", "a", "d", "dv")

FEET_TO_METERS = 0.3048

# canonical column -> accepted header names, first match wins
DEFAULT_COLUMNS: dict[str, tuple[str, ...]] = {
    "vehicle_id": ("Vehicle_ID", "vehicle_id"),
    "frame_id": ("Frame_ID", "frame_id"),
    "velocity": ("v_Vel", "Vehicle_Velocity", "velocity"),
    "acceleration": ("v_Acc", "Vehicle_Acceleration", "acceleration"),
    "space_headway": ("Space_Headway", "Spacing", "space_headway"),
    "preceding_id": ("Preceding", "Preceeding", "Preceding_Vehicle", "preceding_id"),
}


def parse_kv(text: str) -> dict[str, str]:
    """Parse ``key = value`` lines into a dict (later keys override earlier ones)."""
    out: dict[str, str] = {}
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {line_no}: expected 'key = value', got {raw!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if not key:
            raise ConfigError(f"line {line_no}: empty key")
        out[key] = value
    return out


def read_kv(path: str | Path) -> dict[str, str]:
    return parse_kv(Path(path).read_text(encoding="utf-8"))


def _as_float(key: str, value: str) -> float:
    try:
        x = float(value)
    except ValueError:
        raise ConfigError(f"{key}: expected a number, got {value!r}") from None
    if not math.isfinite(x):
        raise ConfigError(f"{key}: value must be finite")
    return x


def _as_int(key: str, value: str) -> int:
    x = _as_float(key, value)
    if x != int(x):
        raise ConfigError(f"{key}: expected an integer, got {value!r}")
    return int(x)


def _as_bool(key: str, value: str) -> bool:
    v = value.lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"{key}: expected a boolean, got {value!r}")


@dataclass(frozen=True)
class IngestConfig:
    min_duration_s: float = 50.0
    dt_s: float = 0.1
    smoothing_window_s: float = 0.5
    unit_conversion: str = "none"  # or "feet_to_meters"
    columns: Mapping[str, tuple[str, ...]] = field(default_factory=lambda: dict(DEFAULT_COLUMNS))
    location: str | None = None  # filter on a "Location" column when present

    def __post_init__(self):
        if not self.min_duration_s > 0:
            raise ConfigError("min_duration_s must be > 0")
        if not self.dt_s > 0:
            raise ConfigError("dt_s must be > 0")
        if not self.smoothing_window_s >= 0:
            raise ConfigError("smoothing_window_s must be >= 0")
        if self.unit_conversion not in ("none", "feet_to_meters"):
            raise ConfigError(f"unknown unit_conversion {self.unit_conversion!r}")
        missing = set(DEFAULT_COLUMNS) - set(self.columns)
        if missing:
            raise ConfigError(f"no aliases for columns {sorted(missing)}")

    @property
    def min_frames(self) -> int:
        """Smallest episode length (frames) whose duration reaches ``min_duration_s``."""
        return math.ceil(self.min_duration_s / self.dt_s - 1e-9)

    @property
    def smoothing_frames(self) -> int:
        """Odd moving-average window in frames (1 disables smoothing)."""
        w = int(round(self.smoothing_window_s / self.dt_s))
        if w < 1:
            return 1
        return w if w % 2 == 1 else w + 1


@dataclass(frozen=True)
class SegmentationConfig:
    """Thresholds of the rule-based segmentation for one variable."""

    theta1: float
    theta2: float
    delta: float
    gamma: int

    def __post_init__(self):
        if not self.theta2 < 0 < self.theta1:
            raise ConfigError(f"need theta2 < 0 < theta1, got {self.theta2}, {self.theta1}")
        if self.gamma < 1:
            raise ConfigError("gamma must be >= 1")


DEFAULT_SEGMENTATION: dict[str, SegmentationConfig] = {
    "v": SegmentationConfig(theta1=2.0, theta2=-2.0, delta=20.0, gamma=30),
    "a": SegmentationConfig(theta1=0.25, theta2=-0.25, delta=0.25, gamma=30),
    "d": SegmentationConfig(theta1=1.0, theta2=-1.0, delta=1.0, gamma=30),
    "dv": SegmentationConfig(theta1=2.0, theta2=-2.0, delta=2.0, gamma=30),
}


@dataclass(frozen=True)
class PipelineConfig:
    ingest: IngestConfig = field(default_factory=IngestConfig)
    segmentation: Mapping[str, SegmentationConfig] = field(
        default_factory=lambda: dict(DEFAULT_SEGMENTATION)
    )
    tau: int = 10
    eta: int = 50
    long_at_eta: bool = True  # duration == eta counts as "lg"
    smoothing_alpha: float = 0.0  # additive smoothing of transition counts
    flow_id: str = "flow"

    def __post_init__(self):
        if self.tau < 1 or self.eta < 1:
            raise ConfigError("tau and eta must be >= 1")
        if self.smoothing_alpha < 0:
            raise ConfigError("chain.smoothing must be >= 0")
        if set(self.segmentation) != set(VARIABLES):
            raise ConfigError(f"segmentation must cover exactly {VARIABLES}")

    @classmethod
    def from_mapping(cls, kv: Mapping[str, str]) -> PipelineConfig:
        ingest_kw: dict = {}
        columns = dict(DEFAULT_COLUMNS)
        seg = {var: {f.name: getattr(cfg, f.name) for f in fields(cfg)}
               for var, cfg in DEFAULT_SEGMENTATION.items()}
        top: dict = {}
        for key, value in kv.items():
            parts = key.split(".")
            if key == "flow_id":
                top["flow_id"] = value
            elif parts[0] == "ingest" and len(parts) == 3 and parts[1] == "column":
                if parts[2] not in DEFAULT_COLUMNS:
                    raise ConfigError(f"unknown column {parts[2]!r}")
                columns[parts[2]] = tuple(a.strip() for a in value.split("|") if a.strip())
            elif parts[0] == "ingest" and len(parts) == 2:
                name = parts[1]
                if name in ("min_duration_s", "dt_s", "smoothing_window_s"):
                    ingest_kw[name] = _as_float(key, value)
                elif name in ("unit_conversion", "location"):
                    ingest_kw[name] = value
                else:
                    raise ConfigError(f"unknown key {key!r}")
            elif parts[0] == "segment" and len(parts) == 3 and parts[1] in seg:
                if parts[2] == "gamma":
                    seg[parts[1]]["gamma"] = _as_int(key, value)
                elif parts[2] in ("theta1", "theta2", "delta"):
                    seg[parts[1]][parts[2]] = _as_float(key, value)
                else:
                    raise ConfigError(f"unknown key {key!r}")
            elif key in ("phase.tau", "phase.eta"):
                top[parts[1]] = _as_int(key, value)
            elif key == "phase.long_at_eta":
                top["long_at_eta"] = _as_bool(key, value)
            elif key == "chain.smoothing":
                top["smoothing_alpha"] = _as_float(key, value)
            elif parts[0] == "synth":
                continue  # synth scripts share the file format
            else:
                raise ConfigError(f"unknown key {key!r}")
        return cls(
            ingest=IngestConfig(columns=columns, **ingest_kw),
            segmentation={var: SegmentationConfig(**kw) for var, kw in seg.items()},
            **top,
        )

    @classmethod
    def load(cls, path: str | Path | None) -> PipelineConfig:
        if path is None:
            return cls()
        return cls.from_mapping(read_kv(path))

    def to_mapping(self) -> dict[str, str]:
        """Flat snapshot in the config-file key space (round-trips through ``from_mapping``)."""
        ing = self.ingest
        out = {
            "flow_id": self.flow_id,
            "ingest.min_duration_s": repr(ing.min_duration_s),
            "ingest.dt_s": repr(ing.dt_s),
            "ingest.smoothing_window_s": repr(ing.smoothing_window_s),
            "ingest.unit_conversion": ing.unit_conversion,
            "phase.tau": str(self.tau),
            "phase.eta": str(self.eta),
            "phase.long_at_eta": str(self.long_at_eta).lower(),
            "chain.smoothing": repr(self.smoothing_alpha),
        }
        if ing.location is not None:
            out["ingest.location"] = ing.location
        for name, aliases in ing.columns.items():
            out[f"ingest.column.{name}"] = "|".join(aliases)
        for var in VARIABLES:
            cfg = self.segmentation[var]
            out[f"segment.{var}.theta1"] = repr(cfg.theta1)
            out[f"segment.{var}.theta2"] = repr(cfg.theta2)
            out[f"segment.{var}.delta"] = repr(cfg.delta)
            out[f"segment.{var}.gamma"] = str(cfg.gamma)
        return dict(sorted(out.items()))

    def with_flow(self, flow_id: str) -> PipelineConfig:
        return replace(self, flow_id=flow_id)

"""Synthetic trajectories and phase sequences with known ground truth.

Used as test oracles: scripted trends must come back out of segmentation,
and populations walked on a known model must score as expected.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping

import numpy as np

from .chain import TransitionModel, build_action_chains, joint_transition
from .config import VARIABLES, SegmentationConfig, parse_kv
from .errors import DegenerateModel, InvalidScript
from .ingest import Trajectory
from .phase import PhaseKey, sort_key
from .segment import Trend

STABLE = (Trend.H, Trend.L)


@dataclass(frozen=True)
class ScriptEntry:
    trend: Trend
    duration: int  # frames
    amplitude: float | None = None  # ramp size for I/D, level for H/L (None holds the level)


@dataclass(frozen=True)
class VariableScript:
    entries: tuple[ScriptEntry, ...]
    start: float = 0.0
    noise_std: float = 0.0

    @property
    def length(self) -> int:
        return sum(e.duration for e in self.entries)

    def boundaries(self) -> list[int]:
        out = [0]
        for e in self.entries:
            out.append(out[-1] + e.duration)
        return out

    def labels(self) -> list[Trend]:
        return [e.trend for e in self.entries]


@dataclass(frozen=True)
class PhaseScript:
    variables: Mapping[str, VariableScript]
    seed: int = 0
    driver_id: int = 1

    @property
    def length(self) -> int:
        lengths = {vs.length for vs in self.variables.values()}
        if len(lengths) != 1:
            raise InvalidScript(f"variables have different total durations {sorted(lengths)}")
        return lengths.pop()


def _render_variable(vs: VariableScript) -> np.ndarray:
    out = np.empty(vs.length)
    level = float(vs.start)
    pos = 0
    for e in vs.entries:
        if e.duration < 1:
            raise InvalidScript(f"duration must be >= 1, got {e.duration}")
        trend = Trend(e.trend)
        j = np.arange(e.duration)
        if trend in (Trend.I, Trend.D):
            if e.amplitude is None or e.amplitude == 0:
                raise InvalidScript(f"{trend} entry needs a non-zero amplitude")
            step = abs(e.amplitude) if trend is Trend.I else -abs(e.amplitude)
            out[pos:pos + e.duration] = level + step * j / e.duration
            level += step
        elif trend in STABLE:
            if e.amplitude is not None:
                level = float(e.amplitude)
            out[pos:pos + e.duration] = level
        else:
            raise InvalidScript(f"unsupported trend {trend}")
        pos += e.duration
    return out


def render_trajectory(script: PhaseScript, dt: float = 0.1) -> Trajectory:
    """Piecewise ramps and plateaus per variable, plus seeded Gaussian noise.

    Variables missing from the script are constant zero.
    """
    unknown = set(script.variables) - set(VARIABLES)
    if unknown:
        raise InvalidScript(f"unknown variables {sorted(unknown)}")
    if not script.variables:
        raise InvalidScript("empty script")
    n = script.length
    rng = np.random.default_rng(script.seed)
    cols = {}
    for var in VARIABLES:
        vs = script.variables.get(var)
        x = np.zeros(n) if vs is None else _render_variable(vs)
        if vs is not None and vs.noise_std > 0:
            x = x + rng.normal(0.0, vs.noise_std, n)
        cols[var] = x
    return Trajectory(script.driver_id, 0, dt, **cols)


def random_clean_script(rng: np.random.Generator, cfg: SegmentationConfig, n_entries: int = 6,
                        noise_std: float = 0.0) -> VariableScript:
    """A script the segmentation should recover exactly.

    Every entry is longer than ``gamma``, ramps move by 2.2 to 5 times
    ``theta1``, plateaus sit clearly on one side of ``delta``, and no two
    neighbouring entries would read as one segment.
    """
    lo, hi = 2.2 * cfg.theta1, 5.0 * cfg.theta1
    margin = 0.5 * cfg.theta1
    level = cfg.delta + rng.choice([-1, 1]) * rng.uniform(margin, 3 * cfg.theta1)
    start = level
    entries = []
    prev = None
    for _ in range(n_entries):
        options = []
        if prev not in STABLE and abs(level - cfg.delta) > margin:
            options.append("stable")
        if prev is not Trend.I:
            options.append(Trend.I)
        if prev is not Trend.D:
            options.append(Trend.D)
        choice = options[rng.integers(len(options))]
        duration = int(rng.integers(cfg.gamma + 5, 3 * cfg.gamma + 1))
        if choice == "stable":
            trend = Trend.H if level > cfg.delta else Trend.L
            entries.append(ScriptEntry(trend, duration))
        else:
            amp = float(rng.uniform(lo, hi))
            entries.append(ScriptEntry(choice, duration, amp))
            level += amp if choice is Trend.I else -amp
            trend = choice
        prev = trend
    return VariableScript(tuple(entries), start=start, noise_std=noise_std)


def sample_population(model: TransitionModel, n_drivers: int, deviation_rate: float, seed: int,
                      length: int = 50) -> list[list[PhaseKey]]:
    """Walk the model's Action-chains; with probability ``deviation_rate`` leave the chain.

    A deviation picks uniformly among the other reachable observed keys. Walks
    start at a uniformly drawn key and stop early at a key with no successor.
    Driver ``i`` uses the seed ``seed + i``.
    """
    if not 0.0 <= deviation_rate <= 1.0:
        raise ValueError("deviation_rate must lie in [0, 1]")
    chains = build_action_chains(model)
    if not chains:
        raise DegenerateModel("no phase key has an observed successor")
    keys = model.keys
    others = {}
    for src, entry in chains.items():
        others[src] = [k for k in keys if k != entry.successor and joint_transition(model, src, k) > 0]
    sources = sorted(chains, key=sort_key)
    out = []
    for i in range(n_drivers):
        rng = np.random.default_rng(seed + i)
        key = sources[rng.integers(len(sources))]
        seq = [key]
        for _ in range(length - 1):
            entry = chains.get(key)
            if entry is None:
                break
            u = rng.random()
            alt = others[key]
            if alt and u < deviation_rate:
                key = alt[rng.integers(len(alt))]
            else:
                key = entry.successor
            seq.append(key)
        out.append(seq)
    return out


def _parse_entries(key: str, text: str) -> tuple[ScriptEntry, ...]:
    entries = []
    for item in text.split(","):
        parts = [p.strip() for p in item.strip().split(":")]
        try:
            trend = Trend(parts[0])
            duration = int(parts[1])
            amp = float(parts[2]) if len(parts) > 2 and parts[2] else None
        except (ValueError, IndexError):
            raise InvalidScript(f"{key}: bad entry {item.strip()!r} (want LABEL:frames[:amplitude])") from None
        entries.append(ScriptEntry(trend, duration, amp))
    return tuple(entries)


@dataclass
class SynthSpec:
    script: PhaseScript
    dt: float = 0.1
    drivers: int = 1


def parse_script(text: str, seed: int | None = None) -> SynthSpec:
    """Read a synth script in the key-value format::

        synth.dt = 0.1
        synth.seed = 7
        synth.drivers = 3
        synth.v.start = 15
        synth.v.noise_std = 0.05
        synth.v.entries = L:100, I:80:6, H:120, D:60:6, L:100
    """
    kv = {k: v for k, v in parse_kv(text).items() if k.startswith("synth.")}
    dt, drivers, base_seed = 0.1, 1, 0
    per_var: dict[str, dict] = {}
    for key, value in kv.items():
        parts = key.split(".")
        try:
            if key == "synth.dt":
                dt = float(value)
            elif key == "synth.drivers":
                drivers = int(value)
            elif key == "synth.seed":
                base_seed = int(value)
            elif len(parts) == 3 and parts[1] in VARIABLES:
                d = per_var.setdefault(parts[1], {})
                if parts[2] == "entries":
                    d["entries"] = _parse_entries(key, value)
                elif parts[2] in ("start", "noise_std"):
                    d[parts[2]] = float(value)
                else:
                    raise InvalidScript(f"unknown key {key!r}")
            else:
                raise InvalidScript(f"unknown key {key!r}")
        except ValueError as exc:
            if isinstance(exc, InvalidScript):
                raise
            raise InvalidScript(f"{key}: bad value {value!r}") from None
    if seed is not None:
        base_seed = seed
    variables = {}
    for var, d in per_var.items():
        if "entries" not in d:
            raise InvalidScript(f"synth.{var}.entries missing")
        variables[var] = VariableScript(d["entries"], d.get("start", 0.0), d.get("noise_std", 0.0))
    if not variables:
        raise InvalidScript("script defines no variables")
    if dt <= 0 or drivers < 1:
        raise InvalidScript("synth.dt must be > 0 and synth.drivers >= 1")
    return SynthSpec(PhaseScript(variables, base_seed), dt, drivers)


def render_flow(spec: SynthSpec) -> list[Trajectory]:
    """One trajectory per driver; driver ``i`` (1-based) is rendered with seed ``seed + i - 1``."""
    out = []
    for i in range(spec.drivers):
        script = PhaseScript(spec.script.variables, spec.script.seed + i, driver_id=i + 1)
        out.append(render_trajectory(script, spec.dt))
    return out

import csv
from collections import Counter
from pathlib import Path

import numpy as np
import pytest

from actionchain.chain import TransitionModel
from actionchain.config import FEET_TO_METERS
from actionchain.phase import TIME_LABELS, PhaseKey
from actionchain.segment import Trend

NGSIM_HEADER = ["Vehicle_ID", "Frame_ID", "Total_Frames", "Local_Y", "v_Vel", "v_Acc",
                "Lane_ID", "Preceding", "Following", "Space_Headway", "Time_Headway"]


def platoon(n_vehicles: int = 6, n_frames: int = 900, seed: int = 0, dt: float = 0.1):
    """Single-lane platoon: vehicle 1 leads, vehicle k follows k - 1 with a driver-specific lag."""
    rng = np.random.default_rng(seed)
    t = np.arange(n_frames) * dt
    knots = rng.uniform(6, 22, size=n_frames // 150 + 2)
    lead_v = np.interp(t, np.linspace(0, t[-1], len(knots)), knots)
    vs = [lead_v]
    for k in range(1, n_vehicles):
        lag = min(int(rng.integers(8, 20)), n_frames - 1)
        gain = rng.uniform(0.9, 1.1)
        prev = vs[-1]
        v = np.concatenate([np.full(lag, prev[0]), prev[:-lag]]) * gain
        v = np.clip(v + rng.normal(0, 0.05, n_frames), 0, None)
        vs.append(v)
    pos = [np.cumsum(v) * dt for v in vs]
    for k in range(1, n_vehicles):
        gap0 = 15 + 5 * k
        pos[k] = pos[k] - pos[k][0] + pos[k - 1][0] - gap0
        # keep followers behind their leader
        pos[k] = np.minimum(pos[k], pos[k - 1] - 3)
    rows = []
    for k in range(n_vehicles):
        acc = np.gradient(vs[k], dt)
        for i in range(n_frames):
            pre = k if k > 0 else 0  # vehicle ids are 1-based
            head = pos[k - 1][i] - pos[k][i] if k > 0 else 0.0
            rows.append(dict(vid=k + 1, frame=i + 1, y=pos[k][i], v=vs[k][i], a=acc[i], pre=pre,
                             fol=k + 2 if k + 1 < n_vehicles else 0, head=head))
    return rows


def write_ngsim(path: Path, rows, feet: bool = False, drop=()):
    """Write rows in NGSIM column layout; ``drop`` removes named columns."""
    f = 1 / FEET_TO_METERS if feet else 1.0
    header = [h for h in NGSIM_HEADER if h not in drop]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for r in rows:
            full = {"Vehicle_ID": r["vid"], "Frame_ID": r["frame"], "Total_Frames": 0,
                    "Local_Y": f"{r['y'] * f:.3f}", "v_Vel": f"{r['v'] * f:.3f}", "v_Acc": f"{r['a'] * f:.3f}",
                    "Lane_ID": 1, "Preceding": r["pre"], "Following": r["fol"],
                    "Space_Headway": f"{r['head'] * f:.3f}", "Time_Headway": 0}
            w.writerow([full[h] for h in header])
    return path


@pytest.fixture
def ngsim_file(tmp_path):
    return write_ngsim(tmp_path / "platoon.csv", platoon())


def ring_model(n_states: int = 4, main: float = 0.7):
    """Every state reaches every state; state i prefers i + 1 with weight ``main``."""
    pool = [(a, b) for a in (Trend.I, Trend.D, Trend.H, Trend.L) for b in (Trend.H, Trend.L)]
    states = pool[:n_states]
    h = np.full((n_states, n_states), (1 - main) / (n_states - 1))
    for i in range(n_states):
        h[i, (i + 1) % n_states] = main
    v = np.array([[0.7, 0.3], [0.6, 0.4]])
    counts = Counter({PhaseKey(s, t): 1 for s in states for t in TIME_LABELS})
    return TransitionModel.from_matrices(states, h, v, counts)

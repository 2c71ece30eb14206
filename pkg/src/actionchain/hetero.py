"""Driving heterogeneity: per-driver deviation from the Action-chain and flow-level 3-sigma flags."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .chain import ActionChainTable, TransitionModel, joint_transition
from .errors import SequenceTooShort, TooFewScores, UnknownState
from .phase import PhaseKey


@dataclass(frozen=True)
class DriverScore:
    driver_id: int
    dh: float
    transitions_used: int
    transitions_skipped: int = 0

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class FlowStats:
    mu: float
    sigma: float
    outliers: tuple[int, ...] = field(default_factory=tuple)
    n: int = 0

    @property
    def threshold(self) -> float:
        return self.mu + 3 * self.sigma

    def to_dict(self) -> dict:
        return {"mu": self.mu, "sigma": self.sigma, "threshold": self.threshold,
                "n_drivers": self.n, "outliers": list(self.outliers)}


def _score_pairs(driver_id: int, sequences: Sequence[Sequence[PhaseKey]],
                 model: TransitionModel, chains: ActionChainTable) -> DriverScore:
    sq = []
    skipped = 0
    for seq in sequences:
        for src, dst in zip(seq, seq[1:]):
            entry = chains.get(src)
            if entry is None:
                skipped += 1
                continue
            try:
                actual = joint_transition(model, src, dst)
            except UnknownState:
                skipped += 1
                continue
            sq.append((actual - entry.jtp) ** 2)
    dh = math.fsum(sq) / len(sq) if sq else 0.0
    return DriverScore(int(driver_id), dh, len(sq), skipped)


def driver_dh(sequence: Sequence[PhaseKey], model: TransitionModel, chains: ActionChainTable,
              driver_id: int = 0) -> DriverScore:
    """Mean squared gap between the driver's transition probabilities and the chain maxima.

    Transitions out of phases without a chain entry are skipped and counted
    in ``transitions_skipped``; the mean runs over the remaining ones.
    """
    if len(sequence) < 2:
        raise SequenceTooShort(f"driver {driver_id}: need at least 2 phases")
    return _score_pairs(driver_id, [sequence], model, chains)


def score_drivers(sequences: Mapping[int, Sequence[Sequence[PhaseKey]]], model: TransitionModel,
                  chains: ActionChainTable) -> list[DriverScore]:
    """Score drivers that may have several episodes; pairs never cross episodes.

    Drivers with no episode of two or more phases are left out.
    """
    out = []
    for driver_id in sorted(sequences):
        seqs = [s for s in sequences[driver_id] if len(s) >= 2]
        if seqs:
            out.append(_score_pairs(driver_id, seqs, model, chains))
    return out


def flow_stats(scores: Sequence[DriverScore]) -> FlowStats:
    """Sample mean and standard deviation of DH; flags DH above mean + 3 sd."""
    if len(scores) < 2:
        raise TooFewScores(f"need at least 2 scores, got {len(scores)}")
    dh = np.array([s.dh for s in scores], dtype=float)
    if np.ptp(dh) == 0:
        # identical scores: report them exactly rather than with rounding residue
        mu, sigma = float(dh[0]), 0.0
    else:
        mu = float(dh.mean())
        sigma = float(dh.std(ddof=1))
    limit = mu + 3 * sigma
    outliers = tuple(s.driver_id for s in scores if s.dh > limit)
    return FlowStats(mu, sigma, outliers, len(scores))

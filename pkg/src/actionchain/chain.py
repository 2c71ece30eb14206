"""Coupled Markov chains over Action phases and the Action-chain table.

Two first-order chains are estimated from consecutive phases of each driver:
one over phase states (the m-tuples of trends) and one over the time labels
``lg``/``st``. Their coupled transition probability is the product of the two
row probabilities; the Action-chain of a phase is its most probable successor
under that product.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Mapping, NamedTuple, Sequence

import numpy as np

from .errors import DegenerateDenominator, IncompatibleStateSpaces, NoTransitions, UnknownState
from .phase import TIME_LABELS, PhaseKey, PhaseLibrary, TimeLabel, sort_key
from .segment import Trend

TIME_INDEX = {t: i for i, t in enumerate(TIME_LABELS)}


def _normalize(counts: np.ndarray, alpha: float = 0.0) -> np.ndarray:
    c = counts.astype(float) + alpha
    sums = c.sum(axis=1, keepdims=True)
    out = np.zeros_like(c)
    np.divide(c, sums, out=out, where=sums > 0)
    return out


@dataclass(eq=False)
class TransitionModel:
    """Estimated state chain and time-label chain of one flow.

    Rows of ``state_matrix`` and ``time_matrix`` are indexed by the current
    state, columns by the next. A row with no observations is all zeros and
    its state is reported by ``absorbing_states``.
    """

    states: tuple[tuple[Trend, ...], ...]
    state_counts: np.ndarray
    time_counts: np.ndarray
    key_counts: Counter = field(default_factory=Counter)
    alpha: float = 0.0
    state_matrix: np.ndarray = field(init=False)
    time_matrix: np.ndarray = field(init=False)

    def __post_init__(self):
        self.state_counts = np.asarray(self.state_counts)
        self.time_counts = np.asarray(self.time_counts)
        n = len(self.states)
        if self.state_counts.shape != (n, n) or self.time_counts.shape != (2, 2):
            raise ValueError("count matrices do not match the state spaces")
        self.index = {s: i for i, s in enumerate(self.states)}
        self.state_matrix = _normalize(self.state_counts, self.alpha)
        self.time_matrix = _normalize(self.time_counts, self.alpha)
        self.state_matrix.flags.writeable = False
        self.time_matrix.flags.writeable = False

    @classmethod
    def from_matrices(cls, states, state_matrix, time_matrix, key_counts=None) -> TransitionModel:
        """Rebuild a model from stored probabilities (counts are not needed to score)."""
        m = cls(tuple(states), np.zeros((len(states), len(states))), np.zeros((2, 2)),
                Counter(key_counts or {}))
        m.state_matrix = np.array(state_matrix, dtype=float)
        m.time_matrix = np.array(time_matrix, dtype=float)
        m.state_matrix.flags.writeable = False
        m.time_matrix.flags.writeable = False
        return m

    @property
    def n_states(self) -> int:
        return len(self.states)

    @property
    def keys(self) -> list[PhaseKey]:
        return sorted(self.key_counts, key=sort_key)

    def absorbing_states(self) -> list[tuple[Trend, ...]]:
        return [s for s, row in zip(self.states, self.state_matrix) if not row.any()]

    def absorbing_times(self) -> list[TimeLabel]:
        return [t for t, row in zip(TIME_LABELS, self.time_matrix) if not row.any()]

    def state_index(self, state) -> int:
        try:
            return self.index[tuple(state)]
        except KeyError:
            raise UnknownState(state) from None

    def p_state(self, src, dst) -> float:
        return float(self.state_matrix[self.state_index(src), self.state_index(dst)])

    def p_time(self, src: TimeLabel, dst: TimeLabel) -> float:
        return float(self.time_matrix[TIME_INDEX[TimeLabel(src)], TIME_INDEX[TimeLabel(dst)]])

    def coupled_conditional(self, l: int, m: int, k: int) -> float:
        """Normalized coupled probability with the state chain as ``h`` and time chain as ``v``.

        Only defined when both chains live on the same state space, i.e. when
        exactly two phase states were observed.
        """
        if self.state_matrix.shape != self.time_matrix.shape:
            raise IncompatibleStateSpaces(
                f"state chain has {self.n_states} states, time chain has {len(TIME_LABELS)}")
        return coupled_conditional(self.state_matrix, self.time_matrix, l, m, k)


def _pairs(sequences: Iterable[Sequence[PhaseKey]]) -> Iterator[tuple[PhaseKey, PhaseKey]]:
    for seq in sequences:
        yield from zip(seq, seq[1:])


def estimate(sequences: Iterable[Sequence[PhaseKey]], alpha: float = 0.0) -> TransitionModel:
    """Count consecutive phase pairs within each sequence and normalize rows.

    Pairs never span two sequences, so drivers (and episodes) stay separate.
    """
    seqs = [list(s) for s in sequences]
    if not any(len(s) >= 2 for s in seqs):
        raise NoTransitions("no sequence has two or more phases")
    key_counts = Counter(k for s in seqs for k in s)
    states = tuple(sorted({k.state for k in key_counts}, key=lambda s: tuple(str(t) for t in s)))
    index = {s: i for i, s in enumerate(states)}
    sc = np.zeros((len(states), len(states)), dtype=np.int64)
    tc = np.zeros((2, 2), dtype=np.int64)
    for a, b in _pairs(seqs):
        sc[index[a.state], index[b.state]] += 1
        tc[TIME_INDEX[a.time], TIME_INDEX[b.time]] += 1
    return TransitionModel(states, sc, tc, key_counts, alpha)


def joint_transition(model: TransitionModel, src: PhaseKey, dst: PhaseKey) -> float:
    """Coupled probability of moving from ``src`` to ``dst``: state factor times time factor."""
    return model.p_state(src.state, dst.state) * model.p_time(src.time, dst.time)


def coupled_distribution(h: np.ndarray, v: np.ndarray, l: int, m: int) -> np.ndarray:
    """Distribution over the next state when both chains are forced to agree on it."""
    h = np.asarray(h, dtype=float)
    v = np.asarray(v, dtype=float)
    if h.shape != v.shape or h.ndim != 2 or h.shape[0] != h.shape[1]:
        raise IncompatibleStateSpaces(f"need two square matrices of equal shape, got {h.shape}, {v.shape}")
    w = h[l] * v[m]
    total = w.sum()
    if not total > 0:
        raise DegenerateDenominator(f"rows {l} and {m} share no reachable state")
    return w / total


def coupled_conditional(h: np.ndarray, v: np.ndarray, l: int, m: int, k: int) -> float:
    return float(coupled_distribution(h, v, l, m)[k])


class ChainEntry(NamedTuple):
    successor: PhaseKey
    jtp: float


class ActionChainTable(dict):
    """Mapping of source phase key to its most probable successor and that probability."""

    def ordered(self) -> list[tuple[PhaseKey, ChainEntry]]:
        return sorted(self.items(), key=lambda kv: (-kv[1].jtp, sort_key(kv[0])))


def build_action_chains(model: TransitionModel,
                        library: PhaseLibrary | Mapping[PhaseKey, int] | None = None) -> ActionChainTable:
    """Most probable successor of every phase key in the library.

    Candidates are the library keys. Ties in joint probability go to the more
    frequent target, then to the smaller key text. Keys with no reachable
    candidate are left out.
    """
    if library is None:
        counts = model.key_counts
    elif isinstance(library, PhaseLibrary):
        counts = library.entries
    else:
        counts = library
    keys = [k for k in sorted(counts, key=sort_key) if tuple(k.state) in model.index]
    if not keys:
        return ActionChainTable()
    s_idx = np.array([model.index[tuple(k.state)] for k in keys])
    t_idx = np.array([TIME_INDEX[k.time] for k in keys])
    freq = np.array([counts[k] for k in keys])
    texts = [sort_key(k) for k in keys]
    table = ActionChainTable()
    for src_s, src_t, src in zip(s_idx, t_idx, keys):
        jtp = model.state_matrix[src_s, s_idx] * model.time_matrix[src_t, t_idx]
        best = jtp.max()
        if not best > 0:
            continue
        cands = np.flatnonzero(jtp == best)
        j = min(cands, key=lambda c: (-freq[c], texts[c]))
        table[src] = ChainEntry(keys[j], float(jtp[j]))
    return table


def format_chain(src: PhaseKey, entry: ChainEntry, digits: int = 2) -> str:
    return f"{src.text(spaced=True)} → {entry.successor.text(spaced=True)} {entry.jtp:.{digits}f}"

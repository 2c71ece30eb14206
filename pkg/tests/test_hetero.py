from collections import Counter

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from actionchain.chain import TransitionModel, build_action_chains, estimate
from actionchain.errors import SequenceTooShort, TooFewScores
from actionchain.hetero import DriverScore, driver_dh, flow_stats, score_drivers
from actionchain.phase import PhaseKey, TimeLabel
from actionchain.segment import Trend
from actionchain.synth import sample_population
from conftest import ring_model
from oracles import mean_std

I, D, H, L = Trend.I, Trend.D, Trend.H, Trend.L
LG, ST = TimeLabel.LONG, TimeLabel.SHORT
A, B, C, E = (I,), (D,), (H,), (L,)


def hand_model():
    """Rows chosen so that A->B scores (0.5, 0.5) and B->A scores (0.3, 0.6)."""
    states = [A, B, C, E]
    h = [[0.5, 0.5, 0.0, 0.0],
         [0.3, 0.0, 0.6, 0.1],
         [1.0, 0.0, 0.0, 0.0],
         [1.0, 0.0, 0.0, 0.0]]
    v = [[1.0, 0.0], [1.0, 0.0]]
    counts = Counter({PhaseKey(s, LG): 1 for s in states})
    return TransitionModel.from_matrices(states, h, v, counts)


def test_hand_case():
    m = hand_model()
    chains = build_action_chains(m)
    assert chains[PhaseKey(B, LG)].jtp == 0.6
    score = driver_dh([PhaseKey(A, LG), PhaseKey(B, LG), PhaseKey(A, LG)], m, chains, driver_id=7)
    assert score.dh == pytest.approx(0.045, abs=1e-12)
    assert (score.driver_id, score.transitions_used, score.transitions_skipped) == (7, 2, 0)


def test_argmax_walk_scores_zero():
    m = hand_model()
    chains = build_action_chains(m)
    seq = [PhaseKey(B, LG)]
    for _ in range(10):
        seq.append(chains[seq[-1]].successor)
    assert driver_dh(seq, m, chains).dh == 0.0


def test_sources_without_chain_are_skipped():
    seq = [PhaseKey(A, LG), PhaseKey(B, LG), PhaseKey(C, LG)]
    m = estimate([seq])
    chains = build_action_chains(m)
    # drop the chain entry for B
    del chains[PhaseKey(B, LG)]
    score = driver_dh(seq, m, chains)
    assert score.transitions_used == 1 and score.transitions_skipped == 1
    assert score.dh == 0.0


def test_unknown_states_are_skipped():
    m = hand_model()
    chains = build_action_chains(m)
    score = driver_dh([PhaseKey(A, LG), PhaseKey((H, H), LG)], m, chains)
    assert score.transitions_used == 0 and score.transitions_skipped == 1 and score.dh == 0.0


def test_too_short():
    m = hand_model()
    with pytest.raises(SequenceTooShort):
        driver_dh([PhaseKey(A, LG)], m, build_action_chains(m))


def test_score_drivers_keeps_episodes_apart():
    m = hand_model()
    chains = build_action_chains(m)
    ab = [PhaseKey(A, LG), PhaseKey(B, LG)]
    ba = [PhaseKey(B, LG), PhaseKey(A, LG)]
    scores = score_drivers({3: [ab, ba], 1: [ab], 2: [[PhaseKey(A, LG)]]}, m, chains)
    assert [s.driver_id for s in scores] == [1, 3]
    assert scores[1].transitions_used == 2
    assert scores[1].dh == pytest.approx(0.045, abs=1e-12)


def test_relabeling_invariance():
    m = hand_model()
    chains = build_action_chains(m)
    seq = [PhaseKey(A, LG), PhaseKey(B, LG), PhaseKey(A, LG), PhaseKey(B, LG)]
    assert driver_dh(seq, m, chains, 1).dh == driver_dh(seq, m, chains, 999).dh


_states = [A, B, C, E, (H, L), (L, H)]
_keys = st.builds(PhaseKey, st.sampled_from(_states), st.sampled_from([LG, ST]))


@settings(max_examples=200, deadline=None)
@given(st.lists(st.lists(_keys, min_size=2, max_size=25), min_size=2, max_size=6))
def test_dh_bounded(seqs):
    m = estimate(seqs)
    chains = build_action_chains(m)
    for seq in seqs:
        assert 0.0 <= driver_dh(seq, m, chains).dh <= 1.0


# flow stats ---------------------------------------------------------------

def scores_of(values):
    return [DriverScore(i, v, 10) for i, v in enumerate(values)]


def test_three_sigma_example():
    values = [0.1] * 99 + [0.9]
    fs = flow_stats(scores_of(values))
    mu, sd = mean_std(values)
    assert fs.mu == pytest.approx(0.108, abs=1e-12)
    assert fs.sigma == pytest.approx(0.0800, abs=5e-5)
    assert fs.sigma == pytest.approx(sd, abs=1e-12)
    assert fs.threshold == pytest.approx(0.348, abs=1e-3)
    assert fs.outliers == (99,)
    assert fs.to_dict()["n_drivers"] == 100


def test_equal_scores():
    fs = flow_stats(scores_of([0.2] * 5))
    assert fs.sigma == 0.0 and fs.outliers == ()
    assert fs.threshold == pytest.approx(0.2)


def test_too_few_scores():
    with pytest.raises(TooFewScores):
        flow_stats(scores_of([0.5]))


@settings(max_examples=200, deadline=None)
@given(st.lists(st.floats(0, 1), min_size=2, max_size=60))
def test_flow_stats_matches_oracle(values):
    fs = flow_stats(scores_of(values))
    mu, sd = mean_std(values)
    assert abs(fs.mu - mu) < 1e-12 and abs(fs.sigma - sd) < 1e-12
    assert set(fs.outliers) <= set(range(len(values)))


# synthetic populations -----------------------------------------------------

def test_population_rates():
    m = ring_model()
    chains = build_action_chains(m)
    zero = sample_population(m, 10, 0.0, seed=3)
    assert all(driver_dh(s, m, chains).dh == 0.0 for s in zero)
    always = [driver_dh(s, m, chains).dh for s in sample_population(m, 10, 1.0, seed=3)]
    assert min(always) > 0
    some = np.mean([driver_dh(s, m, chains).dh for s in sample_population(m, 10, 0.3, seed=3)])
    assert 0 < some <= np.mean(always)


def test_outlier_flagged():
    m = ring_model()
    chains = build_action_chains(m)
    seqs = sample_population(m, 50, 0.1, seed=11) + sample_population(m, 1, 0.9, seed=11 + 50)
    scores = score_drivers({i: [s] for i, s in enumerate(seqs)}, m, chains)
    fs = flow_stats(scores)
    assert fs.outliers == (50,)


@pytest.mark.parametrize("n", [2, 3, 6, 7, 100])
def test_equal_scores_are_exact(n):
    fs = flow_stats(scores_of([0.2] * n))
    assert fs.mu == 0.2 and fs.sigma == 0.0

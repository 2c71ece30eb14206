import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from actionchain.errors import EmptyInput, TimelineMismatch
from actionchain.phase import (ActionPhase, PhaseKey, PhaseLibrary, TimeLabel, atomic_intervals,
                               build_library, extract_phases, format_key, format_top, library_bound,
                               parse_key, time_label, top_k)
from actionchain.segment import Trend, TrendSegment, TrendTimeline
from oracles import overlay_phases

I, D, H, L = Trend.I, Trend.D, Trend.H, Trend.L
LG, ST = TimeLabel.LONG, TimeLabel.SHORT


def timeline(var, *spec):
    segs, pos = [], 0
    for trend, n in spec:
        segs.append(TrendSegment(pos, pos + n, trend))
        pos += n
    return TrendTimeline(var, tuple(segs))


def summary(phases):
    return [(p.state, p.start_frame, p.end_frame, p.key.time.value) for p in phases]


def test_two_variable_overlay():
    a = timeline("a", (I, 60), (L, 60))
    b = timeline("b", (H, 90), (D, 30))
    got = summary(extract_phases([a, b], tau=10, eta=50))
    assert got == [((I, H), 0, 60, "lg"), ((L, H), 60, 90, "st"), ((L, D), 90, 120, "st")]


def test_short_interval_dropped():
    a = timeline("a", (I, 60), (L, 60))
    b = timeline("b", (H, 65), (D, 55))
    got = summary(extract_phases([a, b], tau=10, eta=50))
    assert got == [((I, H), 0, 60, "lg"), ((L, D), 65, 120, "lg")]
    assert all(p.start_frame != 60 for p in extract_phases([a, b], 10, 50))


def test_dropped_gap_joins_equal_neighbours():
    a = timeline("a", (H, 40), (L, 5), (H, 40))
    b = timeline("b", (L, 85))
    (p,) = extract_phases([a, b], tau=10, eta=50)
    assert (p.state, p.start_frame, p.end_frame, p.key.time) == ((H, L), 0, 85, LG)


def test_single_phase_trajectory():
    tls = [timeline(v, (L, 600)) for v in ("v", "a", "d", "dv")]
    (p,) = extract_phases(tls, tau=10, eta=50)
    assert p.key == PhaseKey((L, L, L, L), LG)
    assert p.duration_frames == 600


def test_everything_dropped():
    a = timeline("a", (I, 5), (D, 5))
    assert extract_phases([a], tau=10, eta=50) == []


@pytest.mark.parametrize("duration, long_at_eta, expected", [
    (49, True, ST), (50, True, LG), (51, True, LG), (50, False, ST), (51, False, LG)])
def test_time_label_boundary(duration, long_at_eta, expected):
    assert time_label(duration, 50, long_at_eta) is expected


def test_atomic_intervals_cover():
    a = timeline("a", (I, 30), (D, 70))
    b = timeline("b", (H, 50), (L, 50))
    assert atomic_intervals([a, b]) == [(0, 30, (I, H)), (30, 50, (D, H)), (50, 100, (D, L))]


def test_mismatched_lengths():
    with pytest.raises(TimelineMismatch):
        extract_phases([timeline("a", (I, 60)), timeline("b", (I, 61))], 10, 50)
    with pytest.raises(TimelineMismatch):
        atomic_intervals([])


_spec = st.lists(st.tuples(st.sampled_from([I, D, H, L]), st.integers(1, 40)), min_size=1, max_size=12)


@settings(max_examples=300, deadline=None)
@given(st.lists(_spec, min_size=1, max_size=4), st.integers(1, 20), st.integers(1, 80))
def test_matches_per_frame_oracle(specs, tau, eta):
    n = min(sum(d for _, d in s) for s in specs)
    tls = []
    for i, s in enumerate(specs):
        # trim every timeline to the shortest length
        trimmed, left = [], n
        for trend, d in s:
            if left <= 0:
                break
            trimmed.append((trend, min(d, left)))
            left -= d
        tls.append(timeline(f"x{i}", *trimmed))
    per_frame = [[t.value for t in tl.per_frame()] for tl in tls]
    expected = [(tuple(Trend(x) for x in s), a, b, lab) for s, a, b, lab in overlay_phases(per_frame, tau, eta)]
    assert summary(extract_phases(tls, tau, eta)) == expected


# keys ---------------------------------------------------------------------

def test_key_format_and_parse():
    key = PhaseKey((L, L, H, H), ST)
    assert format_key(key) == "((L,L,H,H), st)"
    assert key.text(spaced=True) == "((L, L, H, H), st)"
    assert parse_key("((L,L,H,H), st)") == key
    assert parse_key(key.text(spaced=True)) == key


def test_parse_key_rejects_garbage():
    with pytest.raises(ValueError):
        parse_key("L,L,H")


# library ------------------------------------------------------------------

def test_library_counts_and_order():
    k1 = PhaseKey((L, L, H, H), ST)
    k2 = PhaseKey((I, L, H, H), LG)
    k3 = PhaseKey((D, L, H, H), LG)
    lib = build_library([k1] * 415 + [k2] * 12 + [k3] * 12, flow_id="I-80")
    assert len(lib) == 3 and lib.total == 439
    assert lib.ordered() == [(k1, 415), (k3, 12), (k2, 12)]
    assert format_top(top_k(lib, 1)) == "((L,L,H,H), st) 415"
    assert lib.count(PhaseKey((H, H, H, H), LG)) == 0


def test_library_from_phases():
    p = ActionPhase(PhaseKey((I,), LG), 0, 60)
    q = ActionPhase(PhaseKey((I,), LG), 70, 140)
    lib = build_library([p, q])
    assert lib.entries == {PhaseKey((I,), LG): 2}


def test_library_merge():
    a = PhaseLibrary(build_library([PhaseKey((I,), LG)]).entries)
    b = build_library([PhaseKey((I,), LG), PhaseKey((D,), ST)])
    m = a.merge(b)
    assert m.total == 3 and m.count(PhaseKey((I,), LG)) == 2


def test_top_k_limits():
    lib = build_library([PhaseKey((I,), LG), PhaseKey((D,), ST)])
    assert len(top_k(lib, 10)) == 2
    with pytest.raises(ValueError):
        top_k(lib, 0)


def test_empty_library():
    with pytest.raises(EmptyInput):
        build_library([])


def test_library_bound():
    assert library_bound(4) == 512
    assert library_bound(1) == 8

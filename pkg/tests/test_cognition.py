import numpy as np
import pytest
from pytest import approx

from cogrec.cognition import (CognitiveState, Device, Pace, SessionContext,
                              capacity, complexity_band, estimate_state)
from cogrec.enrichment import VarkVector
from cogrec.profiling import Goal


def test_capacity_morning_fresh_session_is_maximal():
    assert capacity(9, 0.0) == approx(1.0)


def test_capacity_evening_table_lookup():
    assert capacity(20, 0.0) == approx(0.8)


def test_capacity_night_long_session_hits_floor():
    # night factor 0.6 times the 0.3 fatigue floor
    assert capacity(3, 200.0) == approx(0.18)


def test_capacity_non_increasing_in_session_length():
    for hour in (2, 8, 14, 21):
        values = [capacity(hour, m) for m in np.linspace(0, 300, 80)]
        assert all(a >= b - 1e-12 for a, b in zip(values, values[1:]))
        assert all(0.18 - 1e-12 <= v <= 1.0 for v in values)


def test_attention_desktop_careful():
    ctx = SessionContext(time_of_day=10, device=Device.DESKTOP,
                         interaction_pace=Pace.CAREFUL)
    state = estimate_state(ctx, VarkVector.uniform())
    assert state.attention == approx(0.9)


def test_attention_mobile_fast_is_short():
    ctx = SessionContext(time_of_day=10, device=Device.MOBILE,
                         interaction_pace=Pace.FAST)
    state = estimate_state(ctx, VarkVector.uniform())
    assert state.attention == approx(0.3)


def test_learning_goal_at_full_capacity_prefers_complex():
    ctx = SessionContext(time_of_day=9, device=Device.DESKTOP,
                         stated_goal=Goal.LEARNING)
    state = estimate_state(ctx, VarkVector.uniform())
    assert state.complexity_pref == approx(1.0)


def test_unstated_goal_factor():
    ctx = SessionContext(time_of_day=9, device=Device.DESKTOP)
    state = estimate_state(ctx, VarkVector.uniform())
    assert state.complexity_pref == approx(0.8)


def test_mobile_reweights_presentation():
    vark = VarkVector(0.3, 0.2, 0.3, 0.2)
    ctx = SessionContext(time_of_day=10, device=Device.MOBILE)
    state = estimate_state(ctx, vark)
    # V boosted 1.2x, R damped 0.8x, then max-normalized
    raw = [0.3 * 1.2, 0.2, 0.3 * 0.8, 0.2]
    expected = [w / max(raw) for w in raw]
    assert [state.presentation[l] for l in "vark"] == approx(expected)
    assert max(state.presentation.values()) == approx(1.0)


def test_estimate_state_invariants_over_random_contexts():
    rng = np.random.default_rng(21)
    devices = list(Device)
    paces = list(Pace)
    goals = list(Goal) + [None]
    for _ in range(500):
        ctx = SessionContext(
            time_of_day=int(rng.integers(0, 24)),
            day_of_week=int(rng.integers(0, 7)),
            device=devices[int(rng.integers(len(devices)))],
            session_minutes=float(rng.uniform(0, 500)),
            items_viewed=int(rng.integers(0, 50)),
            interaction_pace=paces[int(rng.integers(len(paces)))],
            stated_goal=goals[int(rng.integers(len(goals)))],
        )
        vark = VarkVector.from_weights(rng.random(4) + 1e-9)
        state = estimate_state(ctx, vark)
        state.validate()


@pytest.mark.parametrize("pref,expected", [
    (1.0, (3, 5)),
    (0.0, (1, 1)),
    (0.5, (1, 3)),
])
def test_complexity_band_endpoints(pref, expected):
    state = CognitiveState(capacity=1.0, attention=1.0, complexity_pref=pref,
                           presentation={"v": 1.0, "a": 1.0, "r": 1.0, "k": 1.0})
    assert complexity_band(state) == expected


def test_complexity_band_always_inside_scale():
    for pref in np.linspace(0, 1, 101):
        state = CognitiveState(capacity=1.0, attention=1.0,
                               complexity_pref=float(pref), presentation={})
        lo, hi = complexity_band(state)
        assert 1 <= lo <= hi <= 5


def test_invalid_hour_rejected():
    with pytest.raises(ValueError):
        capacity(24, 0.0)
    with pytest.raises(ValueError):
        SessionContext(time_of_day=-1).validate()

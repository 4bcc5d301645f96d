import dataclasses

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ndrl.crop_env import (
    CropEnv,
    Schedule,
    SimulationError,
    SoilParams,
    WeatherDay,
    run_season,
    step_day,
)
from ndrl.crop_env.calibration import load_treatments
from ndrl.crop_env.model import initial_state
from ndrl.crop_env.weather import PROFILES

DRY = PROFILES["dry2023"]


def dry_dates():
    return tuple(23000 + d for d in DRY.event_doys)


def tr(name):
    return next(t for t in load_treatments() if t.name == name)


def state_hash(env):
    return hash(dataclasses.astuple(env.state)) ^ hash(env.applied()[0].tobytes())


# -- step_day ---------------------------------------------------------------

def test_saturated_soil_zero_demand_has_no_water_stress(params):
    s = dataclasses.replace(initial_state(params, 2023, 110), soil_water=params.water_capacity)
    day = WeatherDay(110, 25.0, 12.0, 0.0, 20.0, 0.0)
    assert step_day(s, day, 0.0, 0.0, params).wsf_raw == 0.0


def test_empty_soil_without_inputs_is_fully_stressed(params):
    s = dataclasses.replace(initial_state(params, 2023, 110), soil_water=0.0)
    day = WeatherDay(110, 30.0, 15.0, 0.0, 22.0, 5.0)
    assert step_day(s, day, 0.0, 0.0, params).wsf_raw == 1.0


def test_step_day_is_deterministic(params, dry_weather):
    s = initial_state(params, 2023, 110)
    a = step_day(s, dry_weather[0], 30.0, 10.0, params)
    b = step_day(s, dry_weather[0], 30.0, 10.0, params)
    assert a == b


def test_step_day_counts_inputs(params, dry_weather):
    s = initial_state(params, 2023, 110)
    out = step_day(s, dry_weather[0], 30.0, 10.0, params)
    assert out.cum_irrigation == 30.0 and out.cum_nitrogen == 10.0
    assert out.day == s.day + 1 and out.day_index == 1


@settings(max_examples=60, deadline=None)
@given(
    sw=st.floats(0.0, 120.0),
    rain=st.floats(0.0, 80.0),
    irr=st.floats(0.0, 60.0),
    et0=st.floats(0.0, 12.0),
    day_index=st.integers(0, 159),
)
def test_water_conservation(sw, rain, irr, et0, day_index):
    params = SoilParams()
    s = dataclasses.replace(initial_state(params, 2023, 110), soil_water=sw, day_index=day_index)
    out = step_day(s, WeatherDay(110, 25.0, 10.0, rain, 20.0, et0), irr, 0.0, params)
    stage = min(3 * day_index // 160, 2)
    demand = et0 * params.water_demand_factor[stage]
    overflow = max(0.0, sw + rain + irr - params.water_capacity)
    actual_et = min(demand, params.water_uptake_rate * (sw + rain + irr - overflow))
    assert out.soil_water - sw == pytest.approx(rain + irr - actual_et - overflow, abs=1e-9)
    assert 0.0 <= out.soil_water <= params.water_capacity


# -- run_season -------------------------------------------------------------

def test_control_treatment_matches_field_yield(dry_weather, params):
    y = run_season(tr("Tr0_23").schedule, dry_weather, params).yield_kgha
    assert abs(y - 6110) <= 0.15 * 6110


def test_zero_schedule_yields_less_than_control(dry_weather, params):
    zero = Schedule.uniform(dry_dates(), 0.0, 0.0)
    control = run_season(tr("Tr0_23").schedule, dry_weather, params).yield_kgha
    assert run_season(zero, dry_weather, params).yield_kgha < control


def test_run_season_is_bit_identical(dry_weather, params):
    sched = tr("Tr2_23").schedule
    a = run_season(sched, dry_weather, params, trace=True)
    b = run_season(sched, dry_weather, params, trace=True)
    assert a == b
    assert a.final_state == b.final_state


def test_season_totals_and_event_log(dry_weather, params):
    sched = tr("Tr1_23").schedule
    res = run_season(sched, dry_weather, params)
    assert res.total_irrigation == pytest.approx(sched.total_irrigation)
    assert res.total_nitrogen == pytest.approx(sched.total_nitrogen)
    assert [e.date for e in res.event_log] == list(sched.dates)
    assert res.yield_kgha >= 0


def test_schedule_date_outside_weather_is_rejected(dry_weather, params):
    dates = dry_dates()[:-1] + (23000 + 300,)
    with pytest.raises(SimulationError, match="outside weather"):
        run_season(Schedule.uniform(dates, 10.0, 10.0), dry_weather, params)


@pytest.mark.parametrize(
    "dates, irr",
    [
        (tuple(range(23110, 23121)), (0.0,) * 11),
        (tuple(range(23110, 23122))[::-1], (0.0,) * 12),
        (tuple(range(23110, 23122)), (-1.0,) + (0.0,) * 11),
    ],
)
def test_schedule_validation(dates, irr):
    with pytest.raises(SimulationError):
        Schedule(dates, irr, (0.0,) * len(dates))


def test_daily_trace_stays_in_bounds(dry_weather, params):
    res = run_season(tr("Tr3_23").schedule, dry_weather, params, trace=True)
    assert len(res.daily_trace) == len(dry_weather)
    for s in res.daily_trace:
        assert 0.0 <= s.wsf_raw <= 1.0 and 0.0 <= s.nsf_raw <= 1.0
        assert 0.0 <= s.soil_water <= params.water_capacity
        assert s.soil_n >= 0 and s.lai >= 0
    cum_i = [s.cum_irrigation for s in res.daily_trace]
    assert cum_i == sorted(cum_i)


amounts = st.lists(st.sampled_from([0.0, 10.0, 25.0, 40.0, 60.0]), min_size=12, max_size=12)


@settings(max_examples=40, deadline=None)
@given(irr=amounts, nit=amounts)
def test_stress_bounds_over_random_schedules(irr, nit):
    from ndrl.crop_env import generate_weather

    res = run_season(Schedule(dry_dates(), tuple(irr), tuple(nit)), generate_weather(2023, "dry2023"),
                     SoilParams(), trace=True)
    for s in res.daily_trace + (res.final_state,):
        assert 0.0 <= s.wsf_raw <= 1.0 and 0.0 <= s.nsf_raw <= 1.0


@settings(max_examples=40, deadline=None)
@given(irr=amounts, nit=amounts, k=st.integers(0, 11), extra=st.floats(1.0, 60.0))
def test_extra_irrigation_on_stressed_day_never_lowers_yield(irr, nit, k, extra):
    from ndrl.crop_env import generate_weather

    weather = generate_weather(2023, "dry2023")
    base = Schedule(dry_dates(), tuple(irr), tuple(nit))
    res = run_season(base, weather, SoilParams())
    more = list(irr)
    more[k] += extra
    bumped = run_season(Schedule(dry_dates(), tuple(more), tuple(nit)), weather, SoilParams())
    # the surrogate's water response is monotone on every event day, stressed or not
    assert bumped.yield_kgha >= res.yield_kgha


# -- snapshots and lookahead ------------------------------------------------

def test_snapshot_restore_reproduces_trajectory(dry_env):
    dry_env.advance_to_event(2)
    snap = dry_env.snapshot()
    dry_env.apply(30.0, 20.0)
    dry_env.advance_to_event(5)
    uninterrupted = dry_env.state
    dry_env.restore(snap)
    dry_env.apply(30.0, 20.0)
    dry_env.advance_to_event(5)
    assert dry_env.state == uninterrupted


def test_stale_snapshot_restores_the_snapshot(dry_env):
    dry_env.advance_to_event(1)
    snap = dry_env.snapshot()
    dry_env.advance_to_event(6)
    assert dry_env.restore(snap) == snap
    assert dry_env.state.day_index == snap.day_index


def test_nested_snapshots_are_independent(dry_env):
    dry_env.advance_to_event(1)
    outer = dry_env.snapshot()
    dry_env.advance_to_event(3)
    inner = dry_env.snapshot()
    dry_env.finish()
    assert dry_env.restore(inner).day_index == int(dry_env.event_days[3])
    assert dry_env.restore(outer).day_index == int(dry_env.event_days[1])
    assert dry_env.restore(inner) == inner


def test_lookahead_matches_full_season(dry_env, dry_weather, params):
    avg = (537 / 12, 250 / 12)
    y = dry_env.predict_yield(dry_env.snapshot(), (*avg, *avg), avg)
    full = run_season(Schedule.uniform(dry_dates(), *avg), dry_weather, params).yield_kgha
    assert y == full


def test_lookahead_macro_action_lands_on_its_dates(dry_env, dry_weather, params):
    avg = (537 / 12, 250 / 12)
    dry_env.advance_to_event(4)
    y = dry_env.predict_yield(dry_env.snapshot(), (60.0, 0.0, 0.0, 60.0), avg)
    sched_i = [0.0] * 4 + [60.0, 0.0] + [avg[0]] * 6
    sched_n = [0.0] * 4 + [0.0, 60.0] + [avg[1]] * 6
    ref = run_season(Schedule(dry_dates(), tuple(sched_i), tuple(sched_n)), dry_weather, params)
    assert y == ref.yield_kgha


def test_more_water_from_a_drought_never_predicts_less(dry_env):
    dry_env.advance_to_event(2)
    snap = dry_env.snapshot()
    assert dry_env.observe().wsf > 0
    avg = (537 / 12, 250 / 12)
    low = dry_env.predict_yield(snap, (0.0, 0.0, 0.0, 0.0), avg)
    high = dry_env.predict_yield(snap, (60.0, 60.0, 60.0, 60.0), avg)
    assert low <= high


def test_lookahead_is_pure(dry_env):
    dry_env.advance_to_event(3)
    dry_env.apply(20.0, 20.0)
    dry_env.advance_to_event(4)
    before = state_hash(dry_env)
    avg = (537 / 12, 250 / 12)
    a = dry_env.predict_yield(dry_env.snapshot(), (20.0, 40.0, 0.0, 60.0), avg)
    b = dry_env.predict_yield(dry_env.snapshot(), (20.0, 40.0, 0.0, 60.0), avg)
    assert a == b
    assert state_hash(dry_env) == before


def test_lookahead_past_last_cycle_is_an_error(dry_env):
    dry_env.advance_to_event(11)
    with pytest.raises(SimulationError, match="past the last"):
        dry_env.predict_yield(dry_env.snapshot(), (0.0, 0.0, 0.0, 0.0), (0.0, 0.0))


def test_rollout_lanes_match_single_rollouts(dry_env):
    rng = np.random.default_rng(0)
    irr = rng.uniform(0, 60, size=(8, 12))
    nit = rng.uniform(0, 60, size=(8, 12))
    dry_env.advance_to_event(2)
    snap = dry_env.snapshot()
    batch = dry_env.rollout_yields(snap, irr, nit)
    singles = [dry_env.rollout_yields(snap, irr[i:i + 1], nit[i:i + 1])[0] for i in range(8)]
    assert np.array_equal(batch, np.array(singles))


def test_env_rejects_misaligned_events(dry_weather, params):
    with pytest.raises(SimulationError):
        CropEnv(dry_weather, params, DRY.event_doys[:11], 2023)
    with pytest.raises(SimulationError, match="not an event day"):
        env = CropEnv(dry_weather, params, DRY.event_doys, 2023)
        env.advance_to(3)
        env.apply(1.0, 1.0)


def test_yield_undefined_mid_season(dry_env):
    dry_env.advance_to_event(3)
    with pytest.raises(SimulationError, match="end of the season"):
        dry_env.season_yield()


def test_params_round_trip_and_validation():
    p = SoilParams(water_capacity=150.0, stress_yield_sensitivity=(2.0, 1.0))
    assert SoilParams.from_dict(p.to_dict()) == p
    with pytest.raises(SimulationError):
        SoilParams(init_water=500.0)
    with pytest.raises(SimulationError):
        SoilParams(yield_potential=0.0)

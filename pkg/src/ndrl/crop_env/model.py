"""Surrogate cotton simulator: daily soil-water and soil-nitrogen buckets.

Each day the crop draws water and nitrogen from two well-mixed pools. Uptake
supply is a fixed fraction of what is in the pool; stress is the unmet
fraction of the stage-dependent demand. Leaf area grows logistically while
unstressed and senesces in the boll stage, biomass follows intercepted
radiation, and harvest yield is the potential scaled by the mean seasonal
water and nitrogen stress.

The day loop lives in :func:`_advance`, a numba kernel that works on a batch
of independent lanes. The live environment is a batch of one; yield
lookahead evaluates many candidate actions as parallel lanes of the same
kernel, so both go through exactly the same arithmetic.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field, replace
from typing import Sequence

import numpy as np
from numba import njit

from .weather import WeatherDay

N_EVENTS = 12
N_STAGES = 3
STAGE_NAMES = ("seedling", "flowering", "boll")


class SimulationError(ValueError):
    pass


@dataclass(frozen=True)
class SoilParams:
    """Surrogate soil and crop knobs.

    Defaults are the best point of the shipped calibration grid against the
    2023/2024 field treatments.
    """

    water_capacity: float = 120.0
    init_water: float = 60.0
    init_n: float = 20.0
    n_demand_curve: tuple[float, float, float] = (0.6, 2.2, 1.4)
    water_demand_factor: tuple[float, float, float] = (0.45, 1.05, 0.85)
    yield_potential: float = 9750.0
    stress_yield_sensitivity: tuple[float, float] = (1.5, 2.0)
    water_uptake_rate: float = 0.10
    n_uptake_rate: float = 0.12
    n_loss_rate: float = 0.01
    lai_init: float = 0.05
    lai_max: float = 5.0
    lai_growth: float = 0.09
    lai_senescence: float = 0.012
    rue: float = 0.7  # g dry matter per MJ

    def __post_init__(self):
        if not 0.0 <= self.init_water <= self.water_capacity:
            raise SimulationError("init_water must lie in [0, water_capacity]")
        if self.yield_potential <= 0:
            raise SimulationError("yield_potential must be positive")
        if len(self.n_demand_curve) != N_STAGES or len(self.water_demand_factor) != N_STAGES:
            raise SimulationError("demand curves need one value per growth stage")
        if min(self.n_demand_curve) < 0 or min(self.water_demand_factor) < 0:
            raise SimulationError("demands must be non-negative")
        if min(self.stress_yield_sensitivity) < 0:
            raise SimulationError("stress sensitivities must be non-negative")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "SoilParams":
        kw = dict(d)
        for k in ("n_demand_curve", "water_demand_factor", "stress_yield_sensitivity"):
            if k in kw:
                kw[k] = tuple(float(v) for v in kw[k])
        return cls(**kw)

    def kernel_vector(self) -> np.ndarray:
        # layout must match the unpacking at the top of _advance
        return np.array(
            [
                self.water_capacity,
                self.water_uptake_rate,
                self.n_uptake_rate,
                self.n_loss_rate,
                *self.water_demand_factor,
                *self.n_demand_curve,
                self.lai_max,
                self.lai_growth,
                self.lai_senescence,
                self.rue,
            ],
            dtype=np.float64,
        )


@dataclass(frozen=True)
class CropState:
    """Simulator state at the start of a season day.

    ``wsf_raw``/``nsf_raw`` are the stresses computed on the previous day
    (0 before the first step). ``wsf_sum``/``nsf_sum`` accumulate the daily
    stresses that feed the yield function. Instances are immutable, so a
    state doubles as its own snapshot.
    """

    day: int  # YYDDD
    day_index: int
    soil_water: float
    soil_n: float
    lai: float
    wsf_raw: float
    nsf_raw: float
    biomass: float
    cum_irrigation: float
    cum_nitrogen: float
    wsf_sum: float = 0.0
    nsf_sum: float = 0.0


EnvSnapshot = CropState

# Order of the state columns handed to the kernel.
_STATE_FIELDS = (
    "soil_water",
    "soil_n",
    "lai",
    "wsf_raw",
    "nsf_raw",
    "biomass",
    "cum_irrigation",
    "cum_nitrogen",
    "wsf_sum",
    "nsf_sum",
)


@njit(cache=True)
def _advance(st, start, stop, season_len, rain, et0, srad, event_of_day, irr, nit, prm):
    """Step every lane of ``st`` from day ``start`` up to (excluding) ``stop``.

    ``st`` is (lanes, 10) in ``_STATE_FIELDS`` order and is updated in place.
    ``irr``/``nit`` are (lanes, n_events); ``event_of_day[d]`` is the event
    index applied on day ``d`` or -1.
    """
    cap = prm[0]
    kw = prm[1]
    kn = prm[2]
    nloss = prm[3]
    lmax = prm[10]
    lgrow = prm[11]
    lsen = prm[12]
    rue = prm[13]
    lanes = st.shape[0]
    for d in range(start, stop):
        stage = (3 * d) // season_len
        if stage > 2:
            stage = 2
        kc = prm[4 + stage]
        ndem = prm[7 + stage]
        demand = et0[d] * kc
        ev = event_of_day[d]
        for b in range(lanes):
            i_amt = 0.0
            n_amt = 0.0
            if ev >= 0:
                i_amt = irr[b, ev]
                n_amt = nit[b, ev]
            avail = st[b, 0] + rain[d] + i_amt
            if avail > cap:
                avail = cap
            supply = kw * avail
            if demand > 0.0:
                ratio = supply / demand
                if ratio > 1.0:
                    ratio = 1.0
                ws = 1.0 - ratio
                et = demand if supply > demand else supply
            else:
                ws = 0.0
                et = 0.0
            navail = st[b, 1] + n_amt
            nsupply = kn * navail
            if ndem > 0.0:
                nratio = nsupply / ndem
                if nratio > 1.0:
                    nratio = 1.0
                ns = 1.0 - nratio
                nup = ndem if nsupply > ndem else nsupply
            else:
                ns = 0.0
                nup = 0.0
            f = (1.0 - ws) * (1.0 - ns)
            lai = st[b, 2]
            if stage < 2:
                lai = lai + lgrow * lai * (1.0 - lai / lmax) * f
            else:
                lai = lai - lsen * lai
            st[b, 0] = avail - et
            st[b, 1] = (navail - nup) * (1.0 - nloss)
            st[b, 2] = lai
            st[b, 3] = ws
            st[b, 4] = ns
            st[b, 5] = st[b, 5] + 10.0 * rue * srad[d] * (1.0 - math.exp(-0.6 * lai)) * f
            st[b, 6] = st[b, 6] + i_amt
            st[b, 7] = st[b, 7] + n_amt
            st[b, 8] = st[b, 8] + ws
            st[b, 9] = st[b, 9] + ns


@dataclass(frozen=True)
class Schedule:
    """Twelve dated (irrigation mm, nitrogen kg/ha) events."""

    dates: tuple[int, ...]
    irrigation: tuple[float, ...]
    nitrogen: tuple[float, ...]

    def __post_init__(self):
        if not (len(self.dates) == len(self.irrigation) == len(self.nitrogen) == N_EVENTS):
            raise SimulationError(f"a schedule needs exactly {N_EVENTS} events")
        if any(b <= a for a, b in zip(self.dates, self.dates[1:])):
            raise SimulationError("schedule dates must be strictly increasing")
        if min(self.irrigation) < 0 or min(self.nitrogen) < 0:
            raise SimulationError("schedule amounts must be non-negative")

    @property
    def total_irrigation(self) -> float:
        return float(sum(self.irrigation))

    @property
    def total_nitrogen(self) -> float:
        return float(sum(self.nitrogen))

    @classmethod
    def uniform(cls, dates: Sequence[int], irrigation: float, nitrogen: float) -> "Schedule":
        n = len(dates)
        return cls(tuple(dates), (float(irrigation),) * n, (float(nitrogen),) * n)


@dataclass(frozen=True)
class EventObservation:
    date: int
    wsf: float
    nsf: float
    laid: float


@dataclass(frozen=True)
class SeasonResult:
    yield_kgha: float
    total_irrigation: float
    total_nitrogen: float
    event_log: tuple[EventObservation, ...]
    daily_trace: tuple[CropState, ...] | None = None
    final_state: CropState | None = field(default=None, compare=False)


def seasonal_yield(wsf_sum: float | np.ndarray, nsf_sum, season_len: int, params: SoilParams):
    """Potential yield reduced by mean seasonal water and nitrogen stress."""
    p, q = params.stress_yield_sensitivity
    mw = np.asarray(wsf_sum) / season_len
    mn = np.asarray(nsf_sum) / season_len
    y = params.yield_potential * (1.0 - mw) ** p * (1.0 - mn) ** q
    return float(y) if np.ndim(y) == 0 else y


def _weather_arrays(weather: Sequence[WeatherDay]):
    rain = np.array([w.rain for w in weather], dtype=np.float64)
    et0 = np.array([w.et0 for w in weather], dtype=np.float64)
    srad = np.array([w.srad for w in weather], dtype=np.float64)
    return rain, et0, srad


def initial_state(params: SoilParams, year: int, start_doy: int) -> CropState:
    return CropState(
        day=(year % 100) * 1000 + start_doy,
        day_index=0,
        soil_water=params.init_water,
        soil_n=params.init_n,
        lai=params.lai_init,
        wsf_raw=0.0,
        nsf_raw=0.0,
        biomass=0.0,
        cum_irrigation=0.0,
        cum_nitrogen=0.0,
    )


def _pack(state: CropState) -> np.ndarray:
    return np.array([[getattr(state, f) for f in _STATE_FIELDS]], dtype=np.float64)


def _unpack(row: np.ndarray, template: CropState, day_index: int, start_day: int) -> CropState:
    values = {f: float(v) for f, v in zip(_STATE_FIELDS, row)}
    return replace(template, day_index=day_index, day=start_day + day_index, **values)


_NO_EVENTS = np.zeros((1, 1), dtype=np.float64)


def step_day(
    state: CropState,
    weather: WeatherDay,
    irrigation: float,
    nitrogen: float,
    params: SoilParams,
    season_len: int = 160,
) -> CropState:
    """Advance ``state`` by one day with the given inputs applied that day."""
    st = _pack(state)
    d = state.day_index
    rain = np.zeros(d + 1)
    et0 = np.zeros(d + 1)
    srad = np.zeros(d + 1)
    rain[d], et0[d], srad[d] = weather.rain, weather.et0, weather.srad
    event_of_day = np.full(d + 1, -1, dtype=np.int64)
    event_of_day[d] = 0
    amounts_i = np.array([[float(irrigation)]])
    amounts_n = np.array([[float(nitrogen)]])
    _advance(st, d, d + 1, season_len, rain, et0, srad, event_of_day,
             amounts_i, amounts_n, params.kernel_vector())
    return _unpack(st[0], state, d + 1, state.day - d)


class CropEnv:
    """Stateful season simulator with fixed event dates.

    The environment sits at the start of ``state.day_index``. Decisions are
    made at event days: :meth:`advance_to_event` moves to the start of an
    event day, :meth:`apply` spends that day with the chosen amounts.
    """

    def __init__(
        self,
        weather: Sequence[WeatherDay],
        params: SoilParams,
        event_doys: Sequence[int],
        year: int,
    ):
        if len(event_doys) != N_EVENTS:
            raise SimulationError(f"expected {N_EVENTS} event dates")
        self.weather = list(weather)
        self.params = params
        self.year = year
        self.season_len = len(self.weather)
        first = self.weather[0].doy
        self.start_day = (year % 100) * 1000 + first
        idx = [doy - first for doy in event_doys]
        if min(idx) < 0 or max(idx) >= self.season_len:
            raise SimulationError("schedule date outside weather range")
        if any(b <= a for a, b in zip(idx, idx[1:])):
            raise SimulationError("event dates must be strictly increasing")
        self.event_days = np.array(idx, dtype=np.int64)
        self.event_dates = tuple(self.start_day + i for i in idx)
        self._event_of_day = np.full(self.season_len, -1, dtype=np.int64)
        self._event_of_day[self.event_days] = np.arange(N_EVENTS)
        self._rain, self._et0, self._srad = _weather_arrays(self.weather)
        self._prm = params.kernel_vector()
        self.rollouts = 0
        self.reset()

    def reset(self) -> CropState:
        self.state = initial_state(self.params, self.year, self.weather[0].doy)
        self._applied_i = np.zeros(N_EVENTS)
        self._applied_n = np.zeros(N_EVENTS)
        return self.state

    # -- stepping -------------------------------------------------------
    def _run(self, st, start, stop, irr, nit):
        _advance(st, start, stop, self.season_len, self._rain, self._et0, self._srad,
                 self._event_of_day, irr, nit, self._prm)

    def advance_to(self, day_index: int) -> CropState:
        """Step with no inputs until the start of ``day_index``."""
        d0 = self.state.day_index
        if day_index < d0 or day_index > self.season_len:
            raise SimulationError(f"cannot advance from day {d0} to {day_index}")
        if day_index > d0:
            st = _pack(self.state)
            zeros = np.zeros((1, N_EVENTS))
            self._run(st, d0, day_index, zeros, zeros)
            self.state = _unpack(st[0], self.state, day_index, self.start_day)
        return self.state

    def advance_to_event(self, k: int) -> CropState:
        return self.advance_to(int(self.event_days[k]))

    def finish(self) -> CropState:
        return self.advance_to(self.season_len)

    def current_event(self) -> int:
        ev = self._event_of_day[self.state.day_index] if self.state.day_index < self.season_len else -1
        return int(ev)

    def apply(self, irrigation: float, nitrogen: float) -> CropState:
        """Spend the current (event) day applying the given amounts."""
        ev = self.current_event()
        if ev < 0:
            raise SimulationError(f"day index {self.state.day_index} is not an event day")
        irr = np.zeros((1, N_EVENTS))
        nit = np.zeros((1, N_EVENTS))
        irr[0, ev] = irrigation
        nit[0, ev] = nitrogen
        d = self.state.day_index
        st = _pack(self.state)
        self._run(st, d, d + 1, irr, nit)
        self.state = _unpack(st[0], self.state, d + 1, self.start_day)
        self._applied_i[ev] = irrigation
        self._applied_n[ev] = nitrogen
        return self.state

    # -- snapshots --------------------------------------------------------
    def snapshot(self) -> EnvSnapshot:
        return self.state

    def restore(self, snap: EnvSnapshot) -> CropState:
        self.state = snap
        return self.state

    def season_yield(self, state: CropState | None = None) -> float:
        s = self.state if state is None else state
        if s.day_index != self.season_len:
            raise SimulationError("yield is only defined at the end of the season")
        return seasonal_yield(s.wsf_sum, s.nsf_sum, self.season_len, self.params)

    # -- lookahead --------------------------------------------------------
    def rollout_yields(self, snap: EnvSnapshot, irr: np.ndarray, nit: np.ndarray) -> np.ndarray:
        """Final yields of ``lanes`` independent completions of ``snap``.

        ``irr``/``nit`` are (lanes, 12) full-season amount tables; entries for
        events already behind ``snap`` are ignored. The live state is untouched.
        """
        irr = np.ascontiguousarray(irr, dtype=np.float64)
        nit = np.ascontiguousarray(nit, dtype=np.float64)
        lanes = irr.shape[0]
        st = np.repeat(_pack(snap), lanes, axis=0)
        self._run(st, snap.day_index, self.season_len, irr, nit)
        self.rollouts += lanes
        return seasonal_yield(st[:, 8], st[:, 9], self.season_len, self.params)

    def predict_yield(
        self,
        snap: EnvSnapshot,
        macro_action: Sequence[float],
        completion: tuple[float, float],
        first_event: int | None = None,
    ) -> float:
        """Yield of applying ``macro_action`` = (i1, n1, i2, n2) at the two
        events starting at ``first_event`` and ``completion`` at all later
        events.
        """
        if first_event is None:
            first_event = self.next_event_index(snap)
        if first_event < 0 or first_event + 1 >= N_EVENTS:
            raise SimulationError("snapshot is past the last macro-cycle")
        irr, nit = self.completion_tables(completion, 1)
        i1, n1, i2, n2 = macro_action
        irr[0, first_event], nit[0, first_event] = i1, n1
        irr[0, first_event + 1], nit[0, first_event + 1] = i2, n2
        return float(self.rollout_yields(snap, irr, nit)[0])

    def predict_completion(self, snap: EnvSnapshot, completion: tuple[float, float]) -> float:
        """Yield when every event from ``snap`` onward gets ``completion``."""
        irr, nit = self.completion_tables(completion, 1)
        return float(self.rollout_yields(snap, irr, nit)[0])

    def completion_tables(self, completion: tuple[float, float], lanes: int):
        irr = np.full((lanes, N_EVENTS), float(completion[0]))
        nit = np.full((lanes, N_EVENTS), float(completion[1]))
        return irr, nit

    def next_event_index(self, snap: EnvSnapshot) -> int:
        later = np.nonzero(self.event_days >= snap.day_index)[0]
        return int(later[0]) if later.size else -1

    def observe(self) -> EventObservation:
        s = self.state
        return EventObservation(date=s.day, wsf=s.wsf_raw, nsf=s.nsf_raw, laid=s.lai)

    def applied(self) -> tuple[np.ndarray, np.ndarray]:
        return self._applied_i.copy(), self._applied_n.copy()


def schedule_event_doys(schedule: Schedule) -> tuple[int, list[int]]:
    year = 2000 + schedule.dates[0] // 1000
    return year, [d % 1000 for d in schedule.dates]


def run_season(
    schedule: Schedule,
    weather: Sequence[WeatherDay],
    params: SoilParams,
    trace: bool = False,
) -> SeasonResult:
    """Simulate one full season under ``schedule``."""
    year, doys = schedule_event_doys(schedule)
    env = CropEnv(weather, params, doys, year)
    log = []
    daily = [] if trace else None
    for k in range(N_EVENTS):
        if trace:
            while env.state.day_index < env.event_days[k]:
                daily.append(env.state)
                env.advance_to(env.state.day_index + 1)
        env.advance_to_event(k)
        log.append(env.observe())
        if trace:
            daily.append(env.state)
        env.apply(schedule.irrigation[k], schedule.nitrogen[k])
    if trace:
        while env.state.day_index < env.season_len:
            daily.append(env.state)
            env.advance_to(env.state.day_index + 1)
    final = env.finish()
    return SeasonResult(
        yield_kgha=env.season_yield(),
        total_irrigation=final.cum_irrigation,
        total_nitrogen=final.cum_nitrogen,
        event_log=tuple(log),
        daily_trace=tuple(daily) if trace else None,
        final_state=final,
    )

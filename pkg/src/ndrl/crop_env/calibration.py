"""Field treatment fixtures and exhaustive grid calibration of the surrogate."""

from __future__ import annotations

import csv
import itertools
from dataclasses import dataclass, fields, replace
from importlib import resources
from pathlib import Path
from typing import Iterable, Iterator, Mapping, Sequence

import numpy as np

from ..metrics import nrmse
from .model import Schedule, SimulationError, SoilParams, run_season
from .weather import WeatherDay

SCHEDULE_HEADER = ("date", "irrigation_mm", "nitrogen_kgha")


@dataclass(frozen=True)
class Treatment:
    name: str
    schedule: Schedule
    observed_yield: float

    @property
    def year(self) -> int:
        return 2000 + self.schedule.dates[0] // 1000


def load_treatments(path: str | Path | None = None) -> list[Treatment]:
    """Field treatments in long format, 12 rows per treatment.

    Defaults to the shipped 2023/2024 field fixture.
    """
    if path is None:
        text = resources.files("ndrl.data").joinpath("field_treatments.csv").read_text("utf-8")
    else:
        path = Path(path)
        if not path.exists():
            raise FileNotFoundError(f"treatment fixture not found: {path}")
        text = path.read_text("utf-8")
    grouped: dict[str, list[dict]] = {}
    for row in csv.DictReader(text.splitlines()):
        grouped.setdefault(row["treatment"], []).append(row)
    out = []
    for name, rows in grouped.items():
        sched = Schedule(
            tuple(int(r["date"]) for r in rows),
            tuple(float(r["irrigation_mm"]) for r in rows),
            tuple(float(r["nitrogen_kgha"]) for r in rows),
        )
        out.append(Treatment(name, sched, float(rows[0]["yield_kgha"])))
    return out


def read_schedule(path: str | Path) -> Schedule:
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"schedule file not found: {path}")
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if tuple(reader.fieldnames or ()) != SCHEDULE_HEADER:
            raise SimulationError(f"{path}: expected header {','.join(SCHEDULE_HEADER)}")
        rows = list(reader)
    return Schedule(
        tuple(int(r["date"]) for r in rows),
        tuple(float(r["irrigation_mm"]) for r in rows),
        tuple(float(r["nitrogen_kgha"]) for r in rows),
    )


def write_schedule(schedule: Schedule, path: str | Path) -> None:
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(SCHEDULE_HEADER)
        for d, i, n in zip(schedule.dates, schedule.irrigation, schedule.nitrogen):
            writer.writerow([d, repr(float(i)), repr(float(n))])


# Axes searched by default. Everything not listed keeps its SoilParams default.
DEFAULT_GRID: dict[str, list] = {
    "water_capacity": [120.0, 150.0, 180.0],
    "water_uptake_rate": [0.08, 0.10, 0.12],
    "yield_potential": [7000.0 + 250.0 * i for i in range(13)],
    "stress_yield_sensitivity": [
        (p, q) for p in (1.0, 1.5, 2.0, 3.0) for q in (0.5, 1.0, 2.0)
    ],
}


def iter_grid(grid: Mapping[str, Sequence], base: SoilParams | None = None) -> Iterator[SoilParams]:
    """Cartesian product of ``grid`` axes in insertion order, last axis fastest."""
    base = base or SoilParams()
    known = {f.name for f in fields(SoilParams)}
    unknown = set(grid) - known
    if unknown:
        raise SimulationError(f"unknown grid keys: {sorted(unknown)}")
    keys = list(grid)
    for combo in itertools.product(*(grid[k] for k in keys)):
        yield replace(base, **dict(zip(keys, combo)))


# Fields that only scale the final yield; seasons are cached on everything else.
_YIELD_ONLY = {"yield_potential": 1.0, "stress_yield_sensitivity": (0.0, 0.0)}


@dataclass(frozen=True)
class CalibrationResult:
    params: SoilParams
    nrmse: float
    simulated: tuple[float, ...]
    observed: tuple[float, ...]
    evaluated: int


def calibrate(
    param_grid: Iterable[SoilParams] | Mapping[str, Sequence],
    observations: Sequence[tuple[Schedule, float]],
    weather_by_year: Mapping[int, Sequence[WeatherDay]],
) -> CalibrationResult:
    """Grid point minimising yield nRMSE over ``observations``.

    Ties keep the first point in iteration order.
    """
    if len(observations) < 2:
        raise SimulationError("calibration needs at least two observations")
    points = iter_grid(param_grid) if isinstance(param_grid, Mapping) else iter(param_grid)
    for sched, _ in observations:
        year = 2000 + sched.dates[0] // 1000
        if not weather_by_year.get(year):
            raise SimulationError(f"no weather data for year {year}")
    observed = [float(y) for _, y in observations]

    stress_cache: dict[SoilParams, list[tuple[float, float]]] = {}
    best: tuple[float, SoilParams, list[float]] | None = None
    count = 0
    for params in points:
        count += 1
        key = replace(params, **_YIELD_ONLY)
        if key not in stress_cache:
            sums = []
            for sched, _ in observations:
                wx = weather_by_year[2000 + sched.dates[0] // 1000]
                fs = run_season(sched, wx, params).final_state
                sums.append((fs.wsf_sum / len(wx), fs.nsf_sum / len(wx)))
            stress_cache[key] = sums
        p, q = params.stress_yield_sensitivity
        sim = [
            params.yield_potential * (1.0 - mw) ** p * (1.0 - mn) ** q
            for mw, mn in stress_cache[key]
        ]
        err = nrmse(observed, sim)
        if best is None or err < best[0]:
            best = (err, params, sim)
    if best is None:
        raise SimulationError("empty parameter grid")
    err, params, sim = best
    return CalibrationResult(params, err, tuple(sim), tuple(observed), count)


def default_weather_by_year() -> dict[int, list[WeatherDay]]:
    from .weather import DEFAULT_WEATHER_SEED, PROFILES, generate_weather

    return {
        PROFILES[name].year: generate_weather(DEFAULT_WEATHER_SEED[name], name)
        for name in PROFILES
    }

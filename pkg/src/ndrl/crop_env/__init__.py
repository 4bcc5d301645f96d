from .model import (
    CropEnv,
    CropState,
    EnvSnapshot,
    EventObservation,
    Schedule,
    SeasonResult,
    SimulationError,
    SoilParams,
    run_season,
    seasonal_yield,
    step_day,
)
from .weather import (
    DEFAULT_WEATHER_SEED,
    PROFILES,
    WeatherDay,
    WeatherError,
    generate_weather,
    get_profile,
    load_weather,
    write_weather,
)

__all__ = [
    "CropEnv",
    "CropState",
    "EnvSnapshot",
    "EventObservation",
    "Schedule",
    "SeasonResult",
    "SimulationError",
    "SoilParams",
    "run_season",
    "seasonal_yield",
    "step_day",
    "DEFAULT_WEATHER_SEED",
    "PROFILES",
    "WeatherDay",
    "WeatherError",
    "generate_weather",
    "get_profile",
    "load_weather",
    "write_weather",
]

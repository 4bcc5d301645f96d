"""Run configuration: flat ``key = value`` TOML files plus flag overrides.

Every key is optional; unknown keys are rejected so typos fail loudly.

======================  =========================================
key                     meaning
======================  =========================================
year_profile            ``dry2023`` or ``wet2024``
seed                    RNG seed for agents and replay sampling
weather_seed            generator seed (default: profile's own)
weather_file            weather CSV overriding the generator
params_file             calibrated SoilParams JSON
episodes                training episodes
eta                     candidate-set yield fraction
alpha_mix               uniform share of the child mixture
delta                   child neighbourhood half-width (both axes)
parent_step             parent grid spacing
parent_max              largest per-event amount
lr_parent               tabular learning rate
gamma                   discount for both agents
lr_child                SGD step for the child network
batch_size              replay batch size
buffer_capacity         replay capacity
target_sync             updates between target syncs
hidden                  hidden layer width
reward_scale            reward multiplier before the network
eps_parent_start/end    parent epsilon schedule endpoints
eps_parent_decay        fraction of episodes over which it decays
eps_child_start/end     child epsilon schedule endpoints
eps_child_decay         same, child
i_total / n_total       irrigation / nitrogen budget
w_i / w_n               stress reward weights
stress_threshold        raw stress above which WSF/NSF read as 1
completion              lookahead fill-in for undecided dates:
                        ``remaining_budget`` or ``control_average``
======================  =========================================
"""

from __future__ import annotations

import json
import sys
from dataclasses import asdict, dataclass, fields, replace
from pathlib import Path

if sys.version_info >= (3, 11):
    import tomllib
else:  # pragma: no cover
    import tomli as tomllib

from .crop_env.weather import PROFILES


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class RunConfig:
    year_profile: str = "dry2023"
    seed: int = 1
    weather_seed: int | None = None
    weather_file: str | None = None
    params_file: str | None = None
    episodes: int = 2000
    eta: float = 0.8
    alpha_mix: float = 0.6
    delta: float = 20.0
    parent_step: float = 20.0
    parent_max: float = 60.0
    lr_parent: float = 0.1
    gamma: float = 0.95
    lr_child: float = 1e-3
    batch_size: int = 32
    buffer_capacity: int = 10_000
    target_sync: int = 100
    hidden: int = 64
    reward_scale: float = 1e-3
    eps_parent_start: float = 1.0
    eps_parent_end: float = 0.05
    eps_parent_decay: float = 0.7
    eps_child_start: float = 1.0
    eps_child_end: float = 0.05
    eps_child_decay: float = 0.7
    i_total: float = 537.0
    n_total: float = 250.0
    w_i: float = 100.0
    w_n: float = 100.0
    stress_threshold: float = 0.0
    completion: str = "control_average"

    def __post_init__(self):
        if self.year_profile not in PROFILES:
            raise ConfigError(f"unknown year_profile {self.year_profile!r}")
        if self.completion not in ("remaining_budget", "control_average"):
            raise ConfigError(f"unknown completion policy {self.completion!r}")
        if self.episodes < 0:
            raise ConfigError("episodes must be >= 0")
        for name in ("params_file", "weather_file"):
            p = getattr(self, name)
            if p is not None and not Path(p).exists():
                raise ConfigError(f"{name} does not exist: {p}")

    def to_dict(self) -> dict:
        return asdict(self)

    def with_overrides(self, **kw) -> "RunConfig":
        return replace(self, **{k: v for k, v in kw.items() if v is not None})


_FIELD_TYPES = {f.name: f.type for f in fields(RunConfig)}


def _coerce(key: str, value):
    kind = _FIELD_TYPES[key]
    if value is None:
        return None
    if "int" in kind and "float" not in kind and not isinstance(value, bool):
        if isinstance(value, float) and not value.is_integer():
            raise ConfigError(f"{key} must be an integer")
        return int(value)
    if kind == "float":
        return float(value)
    return value


def config_from_mapping(data: dict, base: RunConfig | None = None) -> RunConfig:
    unknown = set(data) - set(_FIELD_TYPES)
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    kw = {k: _coerce(k, v) for k, v in data.items()}
    try:
        return replace(base or RunConfig(), **kw)
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from None


def load_config(path: str | Path) -> RunConfig:
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    try:
        data = tomllib.loads(path.read_text(encoding="utf-8"))
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from None
    nested = [k for k, v in data.items() if isinstance(v, dict)]
    if nested:
        raise ConfigError(f"{path}: config must be flat, found tables {nested}")
    return config_from_mapping(data)


def dump_config(cfg: RunConfig) -> str:
    lines = []
    for k, v in cfg.to_dict().items():
        if v is None:
            continue
        lines.append(f"{k} = {json.dumps(v)}")
    return "\n".join(lines) + "\n"

"""Agronomic productivity, learning-curve and model-agreement statistics."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

M3_PER_MM_HA = 10.0  # 1 mm over 1 ha is 10 m3


class MetricError(ValueError):
    pass


def iwp(yield_kgha: float, irrigation_mm: float) -> float:
    """Irrigation water productivity in kg/m3.

    Zero irrigation has no defined productivity and returns NaN.
    """
    if irrigation_mm < 0 or yield_kgha < 0:
        raise MetricError("yield and irrigation must be non-negative")
    if irrigation_mm == 0:
        return math.nan
    return yield_kgha / (irrigation_mm * M3_PER_MM_HA)


def npfp(yield_kgha: float, nitrogen_kgha: float) -> float:
    """Nitrogen partial factor productivity (kg yield per kg N); NaN at zero N."""
    if nitrogen_kgha < 0 or yield_kgha < 0:
        raise MetricError("yield and nitrogen must be non-negative")
    if nitrogen_kgha == 0:
        return math.nan
    return yield_kgha / nitrogen_kgha


@dataclass(frozen=True)
class MetricsRow:
    label: str
    irrigation: float
    fertilizer_n: float
    yield_kgha: float
    iwp: float
    npfp: float

    @classmethod
    def build(cls, label: str, irrigation: float, fertilizer_n: float, yield_kgha: float) -> "MetricsRow":
        return cls(
            label,
            irrigation,
            fertilizer_n,
            yield_kgha,
            iwp(yield_kgha, irrigation),
            npfp(yield_kgha, fertilizer_n),
        )


def cyasr(yields: Sequence[float], steps: Sequence[int], up_to_episode: int | None = None) -> float:
    """Pooled cumulative yield over pooled action steps.

    ``up_to_episode`` is an exclusive prefix length (default: everything).
    """
    n = len(yields) if up_to_episode is None else up_to_episode
    total_steps = sum(steps[:n])
    if n <= 0 or total_steps <= 0:
        raise MetricError("CYASR needs at least one episode with action steps")
    return float(sum(yields[:n])) / total_steps


def cyasr_series(yields: Sequence[float], steps: Sequence[int]) -> list[float]:
    y = np.cumsum(np.asarray(yields, dtype=float))
    s = np.cumsum(np.asarray(steps, dtype=float))
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.where(s > 0, y / np.where(s > 0, s, 1.0), np.nan)
    return out.tolist()


def avg_cumulative_reward(rewards: Sequence[float], window: int = 50) -> list[float]:
    """Trailing mean over the last ``window`` episodes (shorter at the start)."""
    if window < 1:
        raise MetricError("window must be >= 1")
    r = np.asarray(rewards, dtype=float)
    c = np.concatenate([[0.0], np.cumsum(r)])
    idx = np.arange(1, len(r) + 1)
    lo = np.maximum(idx - window, 0)
    return ((c[idx] - c[lo]) / (idx - lo)).tolist()


def _pair(observed, predicted, min_len=1):
    o = np.asarray(observed, dtype=float)
    p = np.asarray(predicted, dtype=float)
    if o.shape != p.shape or o.ndim != 1:
        raise MetricError("observed and predicted must be 1-D and of equal length")
    if len(o) < min_len:
        raise MetricError(f"need at least {min_len} values")
    return o, p


def nrmse(observed, predicted) -> float:
    """RMSE as a percentage of the observed mean."""
    o, p = _pair(observed, predicted)
    mean = o.mean()
    if mean == 0:
        raise MetricError("observed mean is zero")
    return float(100.0 * np.sqrt(np.mean((p - o) ** 2)) / mean)


def d_index(observed, predicted) -> float:
    """Willmott index of agreement."""
    o, p = _pair(observed, predicted, 2)
    om = o.mean()
    denom = np.sum((np.abs(p - om) + np.abs(o - om)) ** 2)
    if denom == 0:
        raise MetricError("d-index undefined: all values equal the observed mean")
    return float(1.0 - np.sum((p - o) ** 2) / denom)


def r_squared(observed, predicted) -> float:
    """Squared Pearson correlation."""
    o, p = _pair(observed, predicted, 2)
    if np.var(o) == 0:
        raise MetricError("observed series has zero variance")
    if np.var(p) == 0:
        return 0.0
    r = np.corrcoef(o, p)[0, 1]
    return float(r * r)

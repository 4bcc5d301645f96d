"""State and action vocabulary of the two decision levels."""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

LAID_NORM = 6.0
POINTS_PER_AXIS = 5


class SpaceError(ValueError):
    pass


class ParentAction(NamedTuple):
    """Irrigation (mm) and nitrogen (kg/ha) for the two dates of a macro-cycle."""

    i1: float
    n1: float
    i2: float
    n2: float

    def day(self, t: int) -> tuple[float, float]:
        return (self.i1, self.n1) if t == 0 else (self.i2, self.n2)


@dataclass(frozen=True)
class ParentState:
    days: tuple[int, int]
    p_act_dis: ParentAction
    cycle_index: int

    def __post_init__(self):
        if not 1 <= self.cycle_index <= 6:
            raise SpaceError(f"cycle_index must be in 1..6, got {self.cycle_index}")
        if self.days[1] <= self.days[0]:
            raise SpaceError("parent state days must be strictly increasing")

    @property
    def key(self) -> tuple:
        # Dates are fixed per year, so the cycle index identifies them.
        return (self.cycle_index, tuple(float(v) for v in self.p_act_dis))


@dataclass(frozen=True)
class ChildState:
    day: int
    wsf: int
    nsf: int
    laid: float

    def __post_init__(self):
        if self.wsf not in (0, 1) or self.nsf not in (0, 1):
            raise SpaceError("wsf and nsf must be binary")
        if self.laid < 0:
            raise SpaceError("laid must be non-negative")


class ChildAction(NamedTuple):
    irrigation: float
    nitrogen: float
    index: int


@dataclass(frozen=True)
class ChildActionSpace:
    center: tuple[float, float]
    delta: tuple[float, float]
    bounds: tuple[float, float]
    irrigation_axis: tuple[float, ...]
    nitrogen_axis: tuple[float, ...]

    @property
    def points(self) -> list[ChildAction]:
        return [
            ChildAction(i, n, k)
            for k, (i, n) in enumerate(itertools.product(self.irrigation_axis, self.nitrogen_axis))
        ]

    def __len__(self) -> int:
        return len(self.irrigation_axis) * len(self.nitrogen_axis)

    def action(self, index: int) -> ChildAction:
        m = len(self.nitrogen_axis)
        return ChildAction(self.irrigation_axis[index // m], self.nitrogen_axis[index % m], index)

    def coords(self) -> np.ndarray:
        """(25, 2) array of (irrigation, nitrogen), row-major in irrigation."""
        ii, nn = np.meshgrid(self.irrigation_axis, self.nitrogen_axis, indexing="ij")
        return np.stack([ii.ravel(), nn.ravel()], axis=1)


def parent_action_grid(range_max: float = 60.0, step: float = 20.0) -> list[ParentAction]:
    """Lexicographic product of ``{0, step, ..., range_max}`` over four slots."""
    if step <= 0:
        raise SpaceError("step must be positive")
    levels = range_max / step
    if range_max < 0 or abs(levels - round(levels)) > 1e-9:
        raise SpaceError(f"range_max {range_max} is not a multiple of step {step}")
    axis = [float(step * k) for k in range(int(round(levels)) + 1)]
    return [ParentAction(*combo) for combo in itertools.product(axis, repeat=4)]


def quantize(amount: float, step: float, range_max: float) -> float:
    """Nearest parent-grid level (halves round up), clipped to the grid."""
    k = np.floor(amount / step + 0.5)
    return float(min(max(k * step, 0.0), range_max))


def quantize_action(values, step: float, range_max: float) -> ParentAction:
    return ParentAction(*(quantize(v, step, range_max) for v in values))


def _axis(c: float, d: float, hi: float) -> tuple[float, ...]:
    lo_edge = max(c - d, 0.0)
    hi_edge = min(c + d, hi)
    return tuple(float(v) for v in np.linspace(lo_edge, hi_edge, POINTS_PER_AXIS))


def child_action_space(
    center: tuple[float, float],
    delta: tuple[float, float] = (20.0, 20.0),
    bounds: tuple[float, float] = (60.0, 60.0),
) -> ChildActionSpace:
    """5x5 equidistant grid over the clipped neighbourhood of ``center``."""
    ci, cn = center
    if not (0.0 <= ci <= bounds[0] and 0.0 <= cn <= bounds[1]):
        raise SpaceError(f"center {center} outside bounds (0,0)-{bounds}")
    return ChildActionSpace(
        center=(float(ci), float(cn)),
        delta=(float(delta[0]), float(delta[1])),
        bounds=(float(bounds[0]), float(bounds[1])),
        irrigation_axis=_axis(ci, delta[0], bounds[0]),
        nitrogen_axis=_axis(cn, delta[1], bounds[1]),
    )


def flat_action_grid(range_max: float = 60.0, step: float = 20.0) -> list[tuple[float, float]]:
    """Global uniform (irrigation, nitrogen) grid used by the flat baseline."""
    if step <= 0:
        raise SpaceError("step must be positive")
    axis = [float(step * k) for k in range(int(round(range_max / step)) + 1)]
    return list(itertools.product(axis, axis))


def binarize_stress(raw: float, threshold: float = 0.0) -> int:
    if not 0.0 <= raw <= 1.0:
        raise SpaceError(f"stress value {raw} outside [0, 1]")
    return 1 if raw > threshold else 0


def encode_child_state(s: ChildState, season_start: int, season_length: int) -> np.ndarray:
    """Four features in [0, 1]: season position, wsf, nsf, clipped laid/6.

    ``season_start`` is the YYDDD code of the first season day.
    """
    pos = (s.day - season_start) / season_length
    return np.array(
        [min(max(pos, 0.0), 1.0), float(s.wsf), float(s.nsf), min(s.laid / LAID_NORM, 1.0)],
        dtype=np.float64,
    )

"""Exploration machinery for both agents.

The parent explores uniformly over the actions whose predicted yield is
within a fraction of the best one. The child explores with a discrete
Gaussian centred on the parent's daily action, blended with a uniform
distribution so the edge points of its neighbourhood still get visited.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Hashable, Mapping, Sequence, TypeVar

import numpy as np

from .spaces import ChildActionSpace

A = TypeVar("A", bound=Hashable)


class PolicyError(ValueError):
    pass


@dataclass(frozen=True)
class EpsilonSchedule:
    """Linear decay from ``start`` to ``end`` over ``decay_fraction`` of a run."""

    start: float = 1.0
    end: float = 0.05
    decay_fraction: float = 0.7

    def __post_init__(self):
        if not (0.0 <= self.end <= 1.0 and 0.0 <= self.start <= 1.0):
            raise PolicyError("epsilon values must lie in [0, 1]")
        if self.decay_fraction < 0:
            raise PolicyError("decay_fraction must be non-negative")

    def value(self, episode: int, episodes: int) -> float:
        horizon = self.decay_fraction * episodes
        if horizon <= 0 or episode >= horizon:
            return self.end
        return self.start + (self.end - self.start) * episode / horizon


@dataclass(frozen=True)
class MixtureParams:
    eta: float = 0.8
    alpha_mix: float = 0.6
    sigma_fraction: float = 0.5  # sigma = delta * sigma_fraction
    epsilon_parent: EpsilonSchedule = EpsilonSchedule()
    epsilon_child: EpsilonSchedule = EpsilonSchedule()

    def __post_init__(self):
        if not 0.0 < self.eta <= 1.0:
            raise PolicyError("eta must lie in (0, 1]")
        if not 0.0 <= self.alpha_mix <= 1.0:
            raise PolicyError("alpha_mix must lie in [0, 1]")
        if self.sigma_fraction <= 0:
            raise PolicyError("sigma_fraction must be positive")

    def sigma(self, delta: tuple[float, float]) -> tuple[float, float]:
        return (delta[0] * self.sigma_fraction, delta[1] * self.sigma_fraction)


def candidate_set(predicted_yields: Mapping[A, float], eta: float = 0.8) -> list[A]:
    """Actions whose predicted yield reaches ``eta`` times the best, in input order."""
    if not predicted_yields:
        raise PolicyError("no predicted yields")
    best = max(predicted_yields.values())
    threshold = eta * best
    return [a for a, y in predicted_yields.items() if y >= threshold]


def candidate_indices(yields: np.ndarray, eta: float = 0.8) -> np.ndarray:
    """Array form of :func:`candidate_set` over a grid-ordered yield vector."""
    yields = np.asarray(yields, dtype=float)
    if yields.size == 0:
        raise PolicyError("no predicted yields")
    return np.flatnonzero(yields >= eta * yields.max())


def sample_candidate(candidates: Sequence[A], rng: np.random.Generator) -> A:
    if len(candidates) == 0:
        raise PolicyError("empty candidate set")
    return candidates[int(rng.integers(len(candidates)))]


def gaussian_probs(space: ChildActionSpace, sigma: tuple[float, float]) -> np.ndarray:
    """Discrete Gaussian over the 25 points, centred on the space's center."""
    if sigma[0] <= 0 or sigma[1] <= 0:
        raise PolicyError("sigma must be positive")
    xy = space.coords()
    ci, cn = space.center
    z = ((xy[:, 0] - ci) / sigma[0]) ** 2 + ((xy[:, 1] - cn) / sigma[1]) ** 2
    # shifting by the min keeps exp() in range for tiny sigma without changing the ratio
    w = np.exp(-0.5 * (z - z.min()))
    return w / w.sum()


def mixed_probs(gauss: np.ndarray, alpha_mix: float) -> np.ndarray:
    if not 0.0 <= alpha_mix <= 1.0:
        raise PolicyError("alpha_mix must lie in [0, 1]")
    gauss = np.asarray(gauss, dtype=float)
    return (1.0 - alpha_mix) * gauss + alpha_mix / gauss.size


def argmax_first(values) -> int:
    # np.argmax already returns the lowest index on ties
    return int(np.argmax(values))


def select_child_action(
    q_values: np.ndarray,
    dist: np.ndarray,
    epsilon: float,
    rng: np.random.Generator,
) -> int:
    """Greedy index with probability 1 - epsilon, else a draw from ``dist``."""
    if rng.random() < epsilon:
        return int(rng.choice(len(dist), p=dist))
    return argmax_first(q_values)


def select_parent_action(
    q_row: Sequence[float],
    candidates: Sequence[int] | Callable[[], Sequence[int]],
    epsilon: float,
    rng: np.random.Generator,
) -> tuple[int, bool]:
    """Pick a parent action index; returns ``(index, explored)``.

    ``q_row`` is aligned with the parent grid. ``candidates`` may be a
    callable so the (expensive) yield lookahead only runs on the
    exploration branch.
    """
    if rng.random() < epsilon:
        cands = candidates() if callable(candidates) else candidates
        return int(sample_candidate(cands, rng)), True
    return argmax_first(q_row), False

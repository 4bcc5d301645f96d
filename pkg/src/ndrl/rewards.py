"""Stress-coupled child reward and budget-aware parent reward.

The indicator clauses are evaluated exactly as written. Some of them
overlap: with water stress but no nitrogen stress and an above-average
amount, both the reward and the penalty fire and cancel for that resource.
"""

from __future__ import annotations

from dataclasses import dataclass

BUDGET_PENALTY = -5370.0
N_EVENTS = 12


@dataclass(frozen=True)
class Budget:
    i_total: float = 537.0
    n_total: float = 250.0

    def __post_init__(self):
        if self.i_total <= 0 or self.n_total <= 0:
            raise ValueError("budget totals must be positive")

    @property
    def avg_i(self) -> float:
        return self.i_total / N_EVENTS

    @property
    def avg_n(self) -> float:
        return self.n_total / N_EVENTS

    def avg(self, resource: str) -> float:
        return self.avg_i if resource == "I" else self.avg_n


@dataclass(frozen=True)
class RewardWeights:
    w_i: float = 100.0
    w_n: float = 100.0

    def __post_init__(self):
        if self.w_i < 0 or self.w_n < 0:
            raise ValueError("reward weights must be non-negative")


@dataclass(frozen=True)
class StressContext:
    wsf: int
    nsf: int
    applied_i: float
    applied_n: float

    def amount(self, resource: str) -> float:
        return self.applied_i if resource == "I" else self.applied_n


def _check_resource(x: str):
    if x not in ("I", "N"):
        raise ValueError(f"resource must be 'I' or 'N', got {x!r}")


def indicator_penalty(ctx: StressContext, x: str, budget: Budget) -> int:
    _check_resource(x)
    amt, avg = ctx.amount(x), budget.avg(x)
    w, n = ctx.wsf, ctx.nsf
    fires = (
        (w == 0 and n == 0 and amt > avg)
        or (w > 0 and n > 0 and amt < avg)
        or ((w == 0 or n == 0) and amt > avg)
    )
    return int(fires)


def indicator_reward(ctx: StressContext, x: str, budget: Budget) -> int:
    _check_resource(x)
    amt, avg = ctx.amount(x), budget.avg(x)
    w, n = ctx.wsf, ctx.nsf
    fires = (
        (w > 0 and n > 0 and amt > avg)
        or (w > 0 and amt > avg)
        or (n > 0 and amt > avg)
    )
    return int(fires)


def child_reward(hwam: float, ctx: StressContext, weights: RewardWeights, budget: Budget) -> float:
    total = float(hwam)
    for x, w in (("I", weights.w_i), ("N", weights.w_n)):
        total += w * indicator_reward(ctx, x, budget) - w * indicator_penalty(ctx, x, budget)
    return total


def budget_exceeded(cum_i: float, cum_n: float, budget: Budget) -> bool:
    return cum_i >= budget.i_total or cum_n >= budget.n_total


def parent_reward(
    cum_i: float,
    cum_n: float,
    h_c: float,
    h_p: float,
    q_cmax: float,
    budget: Budget,
) -> float:
    """Budget violation dominates; an unimproved child earns 0; else ``q_cmax``."""
    if budget_exceeded(cum_i, cum_n, budget):
        return BUDGET_PENALTY
    if h_c <= h_p:
        return 0.0
    return float(q_cmax)

"""Training loops: nested parent/child agents and the flat DQN baseline.

An episode is one season with twelve decision dates. The nested learner
walks six macro-cycles; in each one the parent proposes amounts for two
adjacent dates and the child refines each date inside a small neighbourhood
of the parent's proposal. The flat baseline makes all twelve decisions with a
single DQN over a global uniform grid.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .child_agent import DqnHyperparams, DqnLearner, Transition
from .config import RunConfig
from .crop_env.calibration import write_schedule
from .crop_env.model import N_EVENTS, CropEnv, Schedule, SeasonResult, SoilParams, run_season
from .crop_env.weather import DEFAULT_WEATHER_SEED, generate_weather, get_profile, load_weather
from .metrics import MetricsRow
from .parent_agent import QTable
from .policy import (
    EpsilonSchedule,
    argmax_first,
    candidate_indices,
    gaussian_probs,
    mixed_probs,
    select_child_action,
    select_parent_action,
)
from .rewards import Budget, RewardWeights, StressContext, budget_exceeded, child_reward, parent_reward
from .spaces import (
    ChildState,
    binarize_stress,
    child_action_space,
    encode_child_state,
    flat_action_grid,
    parent_action_grid,
    quantize_action,
)

N_CYCLES = N_EVENTS // 2
STREAMS = ("parent", "child", "replay", "init", "env")
LOG_HEADER = ("episode", "reward", "yield", "total_i", "total_n", "steps", "violated")


@dataclass(frozen=True)
class EpisodeRecord:
    episode: int
    schedule: Schedule
    yield_kgha: float
    total_i: float
    total_n: float
    reward: float
    action_steps: int
    budget_violated: bool


@dataclass
class TrainingLog:
    method: str
    records: list[EpisodeRecord] = field(default_factory=list)
    best_schedule: Schedule | None = None
    best_yield: float | None = None
    best_episode: int | None = None
    best_so_far: list[float] = field(default_factory=list)
    duration: float = 0.0
    candidate_rollouts: list[int] = field(default_factory=list)

    def add(self, rec: EpisodeRecord) -> None:
        self.records.append(rec)
        if not rec.budget_violated and (self.best_yield is None or rec.yield_kgha > self.best_yield):
            self.best_yield = rec.yield_kgha
            self.best_schedule = rec.schedule
            self.best_episode = rec.episode
        self.best_so_far.append(self.best_yield if self.best_yield is not None else float("nan"))

    @property
    def rewards(self) -> list[float]:
        return [r.reward for r in self.records]

    @property
    def yields(self) -> list[float]:
        return [r.yield_kgha for r in self.records]

    @property
    def steps(self) -> list[int]:
        return [r.action_steps for r in self.records]


def rng_streams(seed: int) -> dict[str, np.random.Generator]:
    """Independent named generators so one component never shifts another."""
    children = np.random.SeedSequence(seed).spawn(len(STREAMS))
    return {name: np.random.default_rng(s) for name, s in zip(STREAMS, children)}


@dataclass
class Season:
    """Everything fixed for one year: weather, params, dates, budgets."""

    config: RunConfig
    weather: list
    params: SoilParams
    year: int
    event_doys: tuple[int, ...]
    budget: Budget
    weights: RewardWeights

    @classmethod
    def from_config(cls, cfg: RunConfig) -> "Season":
        prof = get_profile(cfg.year_profile)
        if cfg.weather_file:
            weather = load_weather(cfg.weather_file)
        else:
            seed = cfg.weather_seed if cfg.weather_seed is not None else DEFAULT_WEATHER_SEED[cfg.year_profile]
            weather = generate_weather(seed, cfg.year_profile)
        params = SoilParams()
        if cfg.params_file:
            params = SoilParams.from_dict(json.loads(Path(cfg.params_file).read_text(encoding="utf-8")))
        return cls(
            config=cfg,
            weather=weather,
            params=params,
            year=prof.year,
            event_doys=prof.event_doys,
            budget=Budget(cfg.i_total, cfg.n_total),
            weights=RewardWeights(cfg.w_i, cfg.w_n),
        )

    def env(self) -> CropEnv:
        return CropEnv(self.weather, self.params, self.event_doys, self.year)

    @property
    def completion(self) -> tuple[float, float]:
        return (self.budget.avg_i, self.budget.avg_n)

    def completion_tables(self, lanes_i, lanes_n, first_rest: int):
        """(lanes, 12) completion amounts for events ``first_rest`` onward.

        ``lanes_i``/``lanes_n`` are the cumulative amounts already committed in
        each lane. Under ``remaining_budget`` the unspent budget is spread
        evenly over the remaining events (never below zero); under
        ``control_average`` every remaining event gets the per-event average.
        """
        lanes_i = np.atleast_1d(np.asarray(lanes_i, dtype=np.float64))
        lanes_n = np.atleast_1d(np.asarray(lanes_n, dtype=np.float64))
        irr = np.zeros((lanes_i.size, N_EVENTS))
        nit = np.zeros((lanes_i.size, N_EVENTS))
        rest = N_EVENTS - first_rest
        if rest <= 0:
            return irr, nit
        if self.config.completion == "remaining_budget":
            irr[:, first_rest:] = np.maximum(self.budget.i_total - lanes_i, 0.0)[:, None] / rest
            nit[:, first_rest:] = np.maximum(self.budget.n_total - lanes_n, 0.0)[:, None] / rest
        else:
            irr[:, first_rest:] = self.budget.avg_i
            nit[:, first_rest:] = self.budget.avg_n
        return irr, nit


def _child_state(env: CropEnv, threshold: float) -> ChildState:
    obs = env.observe()
    return ChildState(
        day=obs.date,
        wsf=binarize_stress(obs.wsf, threshold),
        nsf=binarize_stress(obs.nsf, threshold),
        laid=obs.laid,
    )


def _features(env: CropEnv, threshold: float) -> tuple[ChildState, np.ndarray]:
    cs = _child_state(env, threshold)
    return cs, encode_child_state(cs, env.start_day, env.season_len)


def _step_event(env: CropEnv, season: Season, k: int, irrigation: float, nitrogen: float, cs: ChildState,
                cum: tuple[float, float]):
    """Apply one decision and return (reward, next features, terminal).

    The reward's yield term is the lookahead harvest from the post-action
    state with the configured completion on later dates. ``cum`` holds the
    totals applied before this event. This is the single accounting path
    shared by both learners.
    """
    env.apply(irrigation, nitrogen)
    irr, nit = season.completion_tables(cum[0] + irrigation, cum[1] + nitrogen, k + 1)
    hwam = float(env.rollout_yields(env.snapshot(), irr, nit)[0])
    ctx = StressContext(cs.wsf, cs.nsf, irrigation, nitrogen)
    r = child_reward(hwam, ctx, season.weights, season.budget)
    if k + 1 < N_EVENTS:
        env.advance_to_event(k + 1)
    else:
        env.finish()
    _, x_next = _features(env, season.config.stress_threshold)
    return r, hwam, x_next


def _record(env: CropEnv, season: Season, episode: int, reward: float, steps: int) -> EpisodeRecord:
    final = env.finish()
    irr, nit = env.applied()
    sched = Schedule(env.event_dates, tuple(float(v) for v in irr), tuple(float(v) for v in nit))
    return EpisodeRecord(
        episode=episode,
        schedule=sched,
        yield_kgha=env.season_yield(),
        total_i=final.cum_irrigation,
        total_n=final.cum_nitrogen,
        reward=reward,
        action_steps=steps,
        budget_violated=budget_exceeded(final.cum_irrigation, final.cum_nitrogen, season.budget),
    )


def _dqn_hyper(cfg: RunConfig) -> DqnHyperparams:
    return DqnHyperparams(
        lr=cfg.lr_child,
        gamma=cfg.gamma,
        batch_size=cfg.batch_size,
        target_sync_interval=cfg.target_sync,
        buffer_capacity=cfg.buffer_capacity,
        hidden=cfg.hidden,
        reward_scale=cfg.reward_scale,
    )


class NestedTrainer:
    """Parent tabular Q-learning over macro-cycles with a DQN child."""

    def __init__(self, cfg: RunConfig):
        self.cfg = cfg
        self.season = Season.from_config(cfg)
        self.env = self.season.env()
        self.rngs = rng_streams(cfg.seed)
        self.grid = parent_action_grid(cfg.parent_max, cfg.parent_step)
        self.grid_keys = [tuple(a) for a in self.grid]
        self.grid_arr = np.array(self.grid, dtype=np.float64)
        self.qtable = QTable(lr=cfg.lr_parent, gamma=cfg.gamma)
        self.hyper = _dqn_hyper(cfg)
        self.child = DqnLearner((4, cfg.hidden, cfg.hidden, 25), self.hyper, self.rngs["init"], self.rngs["replay"])
        self.delta = (cfg.delta, cfg.delta)
        self.bounds = (cfg.parent_max, cfg.parent_max)
        self.sigma = (cfg.delta / 2.0, cfg.delta / 2.0)
        self.eps_parent = EpsilonSchedule(cfg.eps_parent_start, cfg.eps_parent_end, cfg.eps_parent_decay)
        self.eps_child = EpsilonSchedule(cfg.eps_child_start, cfg.eps_child_end, cfg.eps_child_decay)
        b = self.season.budget
        start = quantize_action((b.avg_i, b.avg_n, b.avg_i, b.avg_n), cfg.parent_step, cfg.parent_max)
        # Refined amounts last applied at each cycle's dates, on the parent grid.
        self.memory = [tuple(start)] * N_CYCLES
        self.executed: list[dict] = []

    def state_key(self, k: int) -> tuple:
        return (k + 1, self.memory[k])

    def candidate_yields(self, k: int, cum_i: float = 0.0, cum_n: float = 0.0) -> np.ndarray:
        return self.macro_yields(k, self.grid_arr, cum_i, cum_n)

    def macro_yields(self, k: int, macros: np.ndarray, cum_i: float, cum_n: float) -> np.ndarray:
        """Lookahead yield of each (i1, n1, i2, n2) row applied at cycle ``k``."""
        e1, e2 = 2 * k, 2 * k + 1
        irr, nit = self.season.completion_tables(cum_i + macros[:, 0] + macros[:, 2],
                                                 cum_n + macros[:, 1] + macros[:, 3], e2 + 1)
        irr[:, e1], nit[:, e1] = macros[:, 0], macros[:, 1]
        irr[:, e2], nit[:, e2] = macros[:, 2], macros[:, 3]
        return self.env.rollout_yields(self.env.snapshot(), irr, nit)

    def run_episode(self, episode: int) -> tuple[EpisodeRecord, int]:
        cfg, season, env = self.cfg, self.season, self.env
        n_eps = cfg.episodes
        eps_p = self.eps_parent.value(episode, n_eps)
        eps_c = self.eps_child.value(episode, n_eps)
        env.reset()
        total_reward = 0.0
        rollouts = 0
        cum_i = cum_n = 0.0
        for k in range(N_CYCLES):
            env.advance_to_event(2 * k)
            s_key = self.state_key(k)
            cache = {}

            def candidates():
                ys = self.candidate_yields(k, cum_i, cum_n)
                cache["yields"] = ys
                return candidate_indices(ys, cfg.eta)

            q_row = self.qtable.row(s_key, self.grid_keys)
            a_idx, explored = select_parent_action(q_row, candidates, eps_p, self.rngs["parent"])
            a_p = self.grid[a_idx]
            if explored:
                rollouts += len(self.grid)
                h_p = float(cache["yields"][a_idx])
            else:
                h_p = float(self.macro_yields(k, np.array([a_p], dtype=np.float64), cum_i, cum_n)[0])

            refined, hwams, visited = [], [], []
            for t in range(2):
                e = 2 * k + t
                cs, x = _features(env, cfg.stress_threshold)
                space = child_action_space(a_p.day(t), self.delta, self.bounds)
                dist = mixed_probs(gaussian_probs(space, self.sigma), cfg.alpha_mix)
                idx = select_child_action(self.child.q(x), dist, eps_c, self.rngs["child"])
                act = space.action(idx)
                r, hwam, x_next = _step_event(env, season, e, act.irrigation, act.nitrogen, cs, (cum_i, cum_n))
                self.executed.append({"center": space.center, "space": space, "action": act})
                total_reward += r
                cum_i += act.irrigation
                cum_n += act.nitrogen
                refined += [act.irrigation, act.nitrogen]
                hwams.append(hwam)
                visited.append(x)
                self.child.observe(Transition(x, idx, r * self.hyper.reward_scale, x_next, t == 1))

            q_cmax = max(float(self.child.q(x).max()) for x in visited) / self.hyper.reward_scale
            r_p = parent_reward(cum_i, cum_n, max(hwams), h_p, q_cmax, season.budget)
            self.memory[k] = tuple(quantize_action(refined, cfg.parent_step, cfg.parent_max))
            s_next = self.state_key(k + 1) if k + 1 < N_CYCLES else None
            self.qtable.update(s_key, self.grid_keys[a_idx], r_p, s_next, self.grid_keys)
        return _record(env, season, episode, total_reward, N_EVENTS), rollouts

    def train(self, log_actions: bool = False) -> TrainingLog:
        log = TrainingLog("NDRL")
        t0 = time.perf_counter()
        for ep in range(self.cfg.episodes):
            if not log_actions:
                self.executed.clear()
            rec, rollouts = self.run_episode(ep)
            log.add(rec)
            log.candidate_rollouts.append(rollouts)
        log.duration = time.perf_counter() - t0
        return log


class FlatDqnTrainer:
    """Single DQN over the 12 dates with a global uniform (I, N) grid."""

    def __init__(self, cfg: RunConfig):
        self.cfg = cfg
        self.season = Season.from_config(cfg)
        self.env = self.season.env()
        self.rngs = rng_streams(cfg.seed)
        self.actions = flat_action_grid(cfg.parent_max, cfg.parent_step)
        self.hyper = _dqn_hyper(cfg)
        self.learner = DqnLearner((4, cfg.hidden, cfg.hidden, len(self.actions)), self.hyper,
                                  self.rngs["init"], self.rngs["replay"])
        self.eps = EpsilonSchedule(cfg.eps_child_start, cfg.eps_child_end, cfg.eps_child_decay)

    def run_episode(self, episode: int) -> EpisodeRecord:
        cfg, season, env = self.cfg, self.season, self.env
        eps = self.eps.value(episode, cfg.episodes)
        rng = self.rngs["child"]
        env.reset()
        total = 0.0
        cum_i = cum_n = 0.0
        n_act = len(self.actions)
        for k in range(N_EVENTS):
            env.advance_to_event(k)
            cs, x = _features(env, cfg.stress_threshold)
            if rng.random() < eps:
                idx = int(rng.integers(n_act))
            else:
                idx = argmax_first(self.learner.q(x))
            irr, nit = self.actions[idx]
            r, _, x_next = _step_event(env, season, k, irr, nit, cs, (cum_i, cum_n))
            cum_i += irr
            cum_n += nit
            total += r
            self.learner.observe(Transition(x, idx, r * self.hyper.reward_scale, x_next, k == N_EVENTS - 1))
        return _record(env, season, episode, total, N_EVENTS)

    def train(self) -> TrainingLog:
        log = TrainingLog("DQN")
        t0 = time.perf_counter()
        for ep in range(self.cfg.episodes):
            log.add(self.run_episode(ep))
            log.candidate_rollouts.append(0)
        log.duration = time.perf_counter() - t0
        return log


def run_ndrl(cfg: RunConfig) -> TrainingLog:
    return NestedTrainer(cfg).train()


def run_flat_dqn(cfg: RunConfig) -> TrainingLog:
    return FlatDqnTrainer(cfg).train()


def evaluate_schedule(
    schedule: Schedule,
    profile: str,
    params: SoilParams | None = None,
    weather: Sequence | None = None,
    label: str = "schedule",
) -> tuple[SeasonResult, MetricsRow]:
    if weather is None:
        weather = generate_weather(DEFAULT_WEATHER_SEED[profile], profile)
    result = run_season(schedule, weather, params or SoilParams())
    row = MetricsRow.build(label, result.total_irrigation, result.total_nitrogen, result.yield_kgha)
    return result, row


# -- run artifacts ----------------------------------------------------------

def write_training_log(log: TrainingLog, path: str | Path) -> None:
    lines = [",".join(LOG_HEADER)]
    for r in log.records:
        lines.append(
            f"{r.episode},{r.reward!r},{r.yield_kgha!r},{r.total_i!r},{r.total_n!r},"
            f"{r.action_steps},{int(r.budget_violated)}"
        )
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_training_log(path: str | Path) -> list[dict]:
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"training log not found: {path}")
    lines = path.read_text(encoding="utf-8").splitlines()
    if not lines or tuple(lines[0].split(",")) != LOG_HEADER:
        raise ValueError(f"{path}: malformed training log header")
    rows = []
    for n, line in enumerate(lines[1:], start=2):
        parts = line.split(",")
        if len(parts) != len(LOG_HEADER):
            raise ValueError(f"{path}: malformed row at line {n}")
        try:
            rows.append({
                "episode": int(parts[0]),
                "reward": float(parts[1]),
                "yield": float(parts[2]),
                "total_i": float(parts[3]),
                "total_n": float(parts[4]),
                "steps": int(parts[5]),
                "violated": bool(int(parts[6])),
            })
        except ValueError:
            raise ValueError(f"{path}: malformed row at line {n}") from None
    return rows


def write_run(log: TrainingLog, cfg: RunConfig, out: str | Path) -> Path:
    """Write training_log.csv, best_schedule.csv, reward_curve.csv and run_meta.json."""
    from . import __version__
    from .metrics import avg_cumulative_reward, cyasr_series

    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    write_training_log(log, out / "training_log.csv")
    if log.best_schedule is not None:
        write_schedule(log.best_schedule, out / "best_schedule.csv")
    curve = avg_cumulative_reward(log.rewards, 50)
    cy = cyasr_series(log.yields, log.steps)
    lines = ["episode,avg_cumulative_reward,cyasr,best_yield"]
    for i, (a, c, b) in enumerate(zip(curve, cy, log.best_so_far)):
        lines.append(f"{i},{a!r},{c!r},{b!r}")
    (out / "reward_curve.csv").write_text("\n".join(lines) + "\n", encoding="utf-8")
    meta = {
        "method": log.method,
        "config": cfg.to_dict(),
        "seed": cfg.seed,
        "episodes": len(log.records),
        "best_yield": log.best_yield,
        "best_episode": log.best_episode,
        "duration_s": round(log.duration, 3),
        "versions": {"ndrl": __version__, "numpy": np.__version__},
    }
    (out / "run_meta.json").write_text(json.dumps(meta, indent=2) + "\n", encoding="utf-8")
    return out

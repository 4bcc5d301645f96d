import numpy as np
import pytest

from ndrl.child_agent import DivergenceError
from ndrl.config import RunConfig
from ndrl.crop_env.calibration import load_treatments, read_schedule
from ndrl.rewards import Budget
from ndrl.spaces import flat_action_grid
from ndrl.trainer import (
    FlatDqnTrainer,
    NestedTrainer,
    Season,
    TrainingLog,
    evaluate_schedule,
    read_training_log,
    rng_streams,
    run_flat_dqn,
    run_ndrl,
    write_run,
    write_training_log,
)

SHORT = RunConfig(episodes=12, seed=3)


@pytest.fixture(scope="module")
def ndrl_log():
    return run_ndrl(SHORT)


@pytest.fixture(scope="module")
def dqn_log():
    return run_flat_dqn(SHORT)


def test_zero_episodes_touch_nothing():
    t = NestedTrainer(RunConfig(episodes=0))
    start = t.env.state
    log = t.train()
    assert log.records == [] and log.best_schedule is None
    assert t.env.rollouts == 0 and t.env.state == start
    f = FlatDqnTrainer(RunConfig(episodes=0))
    assert f.train().records == [] and f.env.rollouts == 0


def test_nested_runs_are_deterministic(ndrl_log):
    again = run_ndrl(SHORT)
    assert again.records == ndrl_log.records
    assert again.best_schedule == ndrl_log.best_schedule


def test_flat_runs_are_deterministic(dqn_log):
    assert run_flat_dqn(SHORT).records == dqn_log.records


def test_seed_matters(ndrl_log):
    assert run_ndrl(RunConfig(episodes=12, seed=4)).records != ndrl_log.records


def test_named_streams_are_independent():
    a, b = rng_streams(1), rng_streams(1)
    assert a["parent"].random() == b["parent"].random()
    assert a["parent"].random() != a["child"].random()


def test_nested_episode_structure():
    t = NestedTrainer(RunConfig(episodes=6, seed=2))
    parent_updates = []
    original = t.qtable.update

    def counting_update(*args, **kw):
        parent_updates.append(args[0])
        return original(*args, **kw)

    t.qtable.update = counting_update
    log = t.train(log_actions=True)
    assert len(parent_updates) == 6 * 6
    assert [s[0] for s in parent_updates[:6]] == [1, 2, 3, 4, 5, 6]
    assert len(t.child.buffer) == 12 * 6
    assert len(t.executed) == 12 * 6
    for ep, rec in enumerate(log.records):
        acts = t.executed[12 * ep: 12 * (ep + 1)]
        assert rec.action_steps == 12
        assert rec.total_i == sum(a["action"].irrigation for a in acts)
        assert rec.total_n == sum(a["action"].nitrogen for a in acts)
        assert list(rec.schedule.irrigation) == [a["action"].irrigation for a in acts]
        assert rec.budget_violated == (rec.total_i >= 537 or rec.total_n >= 250)


def test_child_actions_stay_in_their_neighbourhood():
    t = NestedTrainer(RunConfig(episodes=5, seed=5))
    t.train(log_actions=True)
    grid_levels = {0.0, 20.0, 40.0, 60.0}
    for item in t.executed:
        space, act = item["space"], item["action"]
        assert act in space.points
        assert set(item["center"]) <= grid_levels
        assert space.center == item["center"]


def test_candidate_rollouts_only_when_exploring():
    explore = RunConfig(episodes=3, eps_parent_start=1.0, eps_parent_end=1.0)
    assert NestedTrainer(explore).train().candidate_rollouts == [6 * 256] * 3
    exploit = RunConfig(episodes=3, eps_parent_start=0.0, eps_parent_end=0.0)
    assert NestedTrainer(exploit).train().candidate_rollouts == [0] * 3


def test_mixed_exploration_counts_whole_grids(ndrl_log):
    assert all(r % 256 == 0 and r <= 6 * 256 for r in ndrl_log.candidate_rollouts)


def test_best_so_far_is_monotone(ndrl_log, dqn_log):
    for log in (ndrl_log, dqn_log):
        seen = [b for b in log.best_so_far if not np.isnan(b)]
        assert seen == sorted(seen)
        if log.best_schedule is not None:
            assert log.best_schedule.total_irrigation < 537
            assert log.best_schedule.total_nitrogen < 250


def test_flat_baseline_shares_the_accounting():
    t = FlatDqnTrainer(RunConfig(episodes=4, seed=6))
    log = t.train()
    grid = set(flat_action_grid())
    for rec in log.records:
        assert rec.action_steps == 12
        assert rec.total_i == sum(rec.schedule.irrigation)
        assert rec.total_n == sum(rec.schedule.nitrogen)
        assert set(zip(rec.schedule.irrigation, rec.schedule.nitrogen)) <= grid
    assert len(t.learner.buffer) == 48


def test_training_log_tracks_feasible_best():
    log = TrainingLog("x")
    from ndrl.trainer import EpisodeRecord

    sched = load_treatments()[0].schedule
    for ep, (y, bad) in enumerate([(5000, True), (4000, False), (6000, True), (4500, False)]):
        log.add(EpisodeRecord(ep, sched, y, 1.0, 1.0, 0.0, 12, bad))
    assert log.best_yield == 4500 and log.best_episode == 3
    assert np.isnan(log.best_so_far[0]) and log.best_so_far[1:] == [4000, 4000, 4500]


def test_completion_tables():
    season = Season.from_config(RunConfig())
    irr, nit = season.completion_tables([0.0, 100.0], [0.0, 250.0], 10)
    assert np.all(irr[:, :10] == 0) and np.allclose(irr[:, 10:], 537 / 12)
    rem = Season.from_config(RunConfig(completion="remaining_budget"))
    irr, nit = rem.completion_tables([437.0, 600.0], [200.0, 250.0], 10)
    assert irr[0, 10:].tolist() == [50.0, 50.0] and irr[1, 10:].tolist() == [0.0, 0.0]
    assert nit[0, 10:].tolist() == [25.0, 25.0] and nit[1, 10:].tolist() == [0.0, 0.0]
    assert not np.any(season.completion_tables([0.0], [0.0], 12)[0])


def test_remaining_budget_mode_runs():
    log = run_ndrl(RunConfig(episodes=3, completion="remaining_budget"))
    assert len(log.records) == 3


def test_divergence_propagates():
    with pytest.raises(DivergenceError):
        run_flat_dqn(RunConfig(episodes=40, lr_child=50.0, reward_scale=1.0))


def test_evaluate_control_schedule(dry_weather, params):
    tr0 = next(t for t in load_treatments() if t.name == "Tr0_23")
    result, row = evaluate_schedule(tr0.schedule, "dry2023", params, dry_weather, "Tr0_23")
    assert row.iwp == result.yield_kgha / 5370
    assert row.npfp == result.yield_kgha / 250
    again = evaluate_schedule(tr0.schedule, "dry2023", params, dry_weather, "Tr0_23")[1]
    assert again == row


def test_learned_schedule_respects_budget(ndrl_log):
    assert ndrl_log.best_schedule is not None
    _, row = evaluate_schedule(ndrl_log.best_schedule, "dry2023")
    b = Budget()
    assert row.irrigation < b.i_total and row.fertilizer_n < b.n_total
    assert row.yield_kgha == pytest.approx(ndrl_log.best_yield)


def test_run_artifacts(tmp_path, ndrl_log):
    out = write_run(ndrl_log, SHORT, tmp_path / "run")
    rows = read_training_log(out / "training_log.csv")
    assert [r["yield"] for r in rows] == ndrl_log.yields
    assert [r["violated"] for r in rows] == [r.budget_violated for r in ndrl_log.records]
    assert read_schedule(out / "best_schedule.csv") == ndrl_log.best_schedule
    import json

    meta = json.loads((out / "run_meta.json").read_text())
    assert meta["config"] == SHORT.to_dict() and meta["seed"] == 3
    curve = (out / "reward_curve.csv").read_text().splitlines()
    assert len(curve) == 1 + SHORT.episodes


def test_malformed_logs(tmp_path):
    with pytest.raises(FileNotFoundError, match="missing.csv"):
        read_training_log(tmp_path / "missing.csv")
    (tmp_path / "a.csv").write_text("ep,reward\n", encoding="utf-8")
    with pytest.raises(ValueError, match="header"):
        read_training_log(tmp_path / "a.csv")
    log = TrainingLog("x")
    write_training_log(log, tmp_path / "b.csv")
    with open(tmp_path / "b.csv", "a", encoding="utf-8") as fh:
        fh.write("0,1.0,2.0,3.0\n")
    with pytest.raises(ValueError, match="line 2"):
        read_training_log(tmp_path / "b.csv")

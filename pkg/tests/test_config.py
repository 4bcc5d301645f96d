import pytest

from ndrl.config import ConfigError, RunConfig, config_from_mapping, dump_config, load_config


def test_defaults():
    cfg = RunConfig()
    assert cfg.episodes == 2000 and cfg.eta == 0.8 and cfg.alpha_mix == 0.6
    assert (cfg.i_total, cfg.n_total) == (537.0, 250.0)
    assert cfg.completion == "control_average"


def test_flat_file(tmp_path):
    p = tmp_path / "c.toml"
    p.write_text('year_profile = "wet2024"\nseed = 4\nepisodes = 10\neta = 0.9\n', encoding="utf-8")
    cfg = load_config(p)
    assert (cfg.year_profile, cfg.seed, cfg.episodes, cfg.eta) == ("wet2024", 4, 10, 0.9)


def test_dump_round_trip(tmp_path):
    cfg = RunConfig(seed=9, episodes=3, delta=10.0)
    p = tmp_path / "c.toml"
    p.write_text(dump_config(cfg), encoding="utf-8")
    assert load_config(p) == cfg


def test_ints_in_float_fields():
    assert config_from_mapping({"eta": 1, "w_i": 50}).w_i == 50.0


@pytest.mark.parametrize(
    "text, match",
    [
        ("etta = 0.8\n", "unknown config keys"),
        ("[agent]\neta = 0.8\n", "flat"),
        ('year_profile = "monsoon"\n', "year_profile"),
        ("episodes = -1\n", "episodes"),
        ("episodes = 2.5\n", "integer"),
        ('completion = "greedy"\n', "completion"),
        ('params_file = "/no/such.json"\n', "does not exist"),
        ("eta = \n", "c.toml"),
    ],
)
def test_bad_configs(tmp_path, text, match):
    p = tmp_path / "c.toml"
    p.write_text(text, encoding="utf-8")
    with pytest.raises(ConfigError, match=match):
        load_config(p)


def test_missing_file(tmp_path):
    with pytest.raises(ConfigError, match="not found"):
        load_config(tmp_path / "none.toml")


def test_overrides_skip_none():
    cfg = RunConfig().with_overrides(seed=3, eta=None)
    assert cfg.seed == 3 and cfg.eta == 0.8

import datetime as dt
import json

import pytest

from cascadenet.config import ENV_SEED, RunConfig, resolve_config
from cascadenet.errors import ConfigError


def test_defaults():
    cfg = RunConfig()
    assert cfg.theta_list == [0.3, 0.5]
    assert cfg.alpha_level == 0.95
    assert cfg.capital_ratio == 0.2
    assert cfg.min_capital_ratio == 0.1
    assert (cfg.shock_low, cfg.shock_high) == (0.1, 0.5)
    assert cfg.systemic_failure_count == 5
    assert cfg.n_runs == 1000
    assert cfg.seed == 42
    assert cfg.reference_price_mode == "mean"
    assert cfg.influence_threshold == 0.5
    assert cfg.output_dir == "out"
    cfg.validate()                        # defaults must be self-consistent


def test_date_parsing():
    cfg = RunConfig(date_start="2012-01-01", date_end="2020-04-30")
    assert cfg.start_date == dt.date(2012, 1, 1)
    assert cfg.end_date == dt.date(2020, 4, 30)
    assert RunConfig().start_date is None


@pytest.mark.parametrize("kwargs,needle", [
    ({"theta_list": []}, "theta_list"),
    ({"theta_list": [0.3, -0.1]}, "positive"),
    ({"theta_list": [0.0]}, "positive"),
    ({"alpha_level": 0.0}, "alpha_level"),
    ({"alpha_level": 1.0}, "alpha_level"),
    ({"min_capital_ratio": 0.3}, "min_capital_ratio"),
    ({"min_capital_ratio": 0.0}, "min_capital_ratio"),
    ({"shock_low": -0.2}, "shock_low"),
    ({"shock_low": 0.5, "shock_high": 0.5}, "shock"),
    ({"systemic_failure_count": -2}, "non-negative"),
    ({"n_runs": 0}, "n_runs"),
    ({"influence_threshold": 0.0}, "influence_threshold"),
    ({"reference_price_mode": "median"}, "reference_price_mode"),
    ({"date_start": "2020-01-01", "date_end": "2020-01-01"}, "precede"),
    ({"date_start": "2021-01-01", "date_end": "2020-01-01"}, "precede"),
    ({"date_start": "01/02/2020"}, "malformed"),
])
def test_validate_rejects(kwargs, needle):
    with pytest.raises(ConfigError, match=needle):
        RunConfig(**kwargs).validate()


def test_dump_and_from_file_round_trip(tmp_path):
    cfg = RunConfig(input_csv="prices.csv", theta_list=[0.25], seed=7,
                    date_start="2015-06-01", date_end="2016-06-01")
    path = tmp_path / "run.json"
    cfg.dump(path)
    assert RunConfig.from_file(path) == cfg
    # the dump is stable, sorted JSON
    assert json.loads(path.read_text())["seed"] == 7
    cfg.dump(tmp_path / "again.json")
    assert (tmp_path / "again.json").read_bytes() == path.read_bytes()


def test_from_file_rejects_unknown_keys(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text(json.dumps({"seed": 1, "volume": 11, "speed": 3}))
    with pytest.raises(ConfigError, match="speed, volume"):
        RunConfig.from_file(path)


def test_from_file_rejects_malformed_json(tmp_path):
    path = tmp_path / "broken.json"
    path.write_text("{not json")
    with pytest.raises(ConfigError, match="not valid JSON"):
        RunConfig.from_file(path)
    path.write_text(json.dumps([1, 2, 3]))
    with pytest.raises(ConfigError, match="flat JSON object"):
        RunConfig.from_file(path)


def test_to_capital_config():
    cap = RunConfig(capital_ratio=0.3, min_capital_ratio=0.05,
                    shock_low=0.0, shock_high=0.2,
                    systemic_failure_count=3).to_capital_config()
    assert cap.capital_ratio == 0.3
    assert cap.min_capital_ratio == 0.05
    assert (cap.shock_low, cap.shock_high) == (0.0, 0.2)
    assert cap.systemic_failure_count == 3


# ---------------------------------------------------------------------------
# layered resolution
# ---------------------------------------------------------------------------

def test_resolve_defaults_when_nothing_given():
    assert resolve_config(env={}) == RunConfig()


def test_flag_beats_file_beats_default(tmp_path):
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps({"seed": 100, "n_runs": 50}))
    cfg = resolve_config(config_path=path, overrides={"seed": 999}, env={})
    assert cfg.seed == 999                # flag wins
    assert cfg.n_runs == 50               # file beats default
    assert cfg.alpha_level == 0.95        # default fills the rest


def test_none_overrides_mean_flag_absent(tmp_path):
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps({"seed": 100}))
    cfg = resolve_config(config_path=path,
                         overrides={"seed": None, "n_runs": None}, env={})
    assert cfg.seed == 100
    assert cfg.n_runs == 1000


def test_env_seed_fills_gap_only():
    assert resolve_config(env={ENV_SEED: "31"}).seed == 31
    assert resolve_config(overrides={"seed": 5}, env={ENV_SEED: "31"}).seed == 5


def test_env_seed_loses_to_file(tmp_path):
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps({"seed": 8}))
    assert resolve_config(config_path=path, env={ENV_SEED: "31"}).seed == 8


def test_env_seed_must_be_integer():
    with pytest.raises(ConfigError, match=ENV_SEED):
        resolve_config(env={ENV_SEED: "abc"})


def test_resolve_rejects_unknown_overrides():
    with pytest.raises(ConfigError, match="warp_factor"):
        resolve_config(overrides={"warp_factor": 9}, env={})


def test_resolved_config_is_validated(tmp_path):
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps({"n_runs": 0}))
    with pytest.raises(ConfigError, match="n_runs"):
        resolve_config(config_path=path, env={})

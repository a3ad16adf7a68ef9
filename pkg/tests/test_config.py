"""Config file parsing, value coercion, and setting precedence."""

import pytest

from actknow.config import ExperimentConfig, parse_config_file, resolve_config, train_config
from actknow.errors import ConfigError
from actknow.training import TrainConfig


def write_config(tmp_path, text):
    path = tmp_path / "run.conf"
    path.write_text(text)
    return str(path)


def test_parse_key_value_lines(tmp_path):
    path = write_config(
        tmp_path,
        """
        # comment line
        seed = 7
        mode = act-know  # trailing comment
        learning_rate = 0.5

        fractions = 0.1, 0.2
        """,
    )
    values = parse_config_file(path)
    assert values == {
        "seed": "7",
        "mode": "act-know",
        "learning_rate": "0.5",
        "fractions": "0.1, 0.2",
    }


def test_parse_rejects_unknown_key(tmp_path):
    path = write_config(tmp_path, "bogus = 1\n")
    with pytest.raises(ConfigError, match=r":1: unknown setting"):
        parse_config_file(path)


def test_parse_rejects_missing_equals(tmp_path):
    path = write_config(tmp_path, "seed 7\n")
    with pytest.raises(ConfigError, match=r":1:"):
        parse_config_file(path)


def test_parse_rejects_empty_value(tmp_path):
    path = write_config(tmp_path, "seed =\n")
    with pytest.raises(ConfigError, match=r":1:"):
        parse_config_file(path)


def test_parse_missing_file():
    with pytest.raises(ConfigError, match="cannot read"):
        parse_config_file("/nonexistent/run.conf")


def test_coercion_types(tmp_path):
    path = write_config(
        tmp_path,
        "seed = 3\nlearning_rate = 0.25\nuse_gcn = false\nuse_er = yes\n"
        "fractions = 0.5,1.0\nseeds = 4, 5\nmodes = text-only\nnode_budgets = 2,8\n",
    )
    cfg = resolve_config({}, path)
    assert cfg.seed == 3
    assert cfg.learning_rate == 0.25
    assert cfg.use_gcn is False
    assert cfg.use_er is True
    assert cfg.fractions == (0.5, 1.0)
    assert cfg.seeds == (4, 5)
    assert cfg.modes == ("text-only",)
    assert cfg.node_budgets == (2, 8)


def test_coercion_rejects_bad_values(tmp_path):
    with pytest.raises(ConfigError):
        resolve_config({}, write_config(tmp_path, "seed = seven\n"))
    with pytest.raises(ConfigError):
        resolve_config({}, write_config(tmp_path, "use_gcn = maybe\n"))
    with pytest.raises(ConfigError):
        resolve_config({}, write_config(tmp_path, "seeds = 1,x\n"))


def test_env_seed_is_weakest(tmp_path, monkeypatch):
    monkeypatch.setenv("ACTKNOW_SEED", "9")
    assert resolve_config({}, None).seed == 9
    path = write_config(tmp_path, "seed = 4\n")
    assert resolve_config({}, path).seed == 4
    assert resolve_config({"seed": 2}, path).seed == 2


def test_env_seed_must_be_integer(monkeypatch):
    monkeypatch.setenv("ACTKNOW_SEED", "lots")
    with pytest.raises(ConfigError, match="ACTKNOW_SEED"):
        resolve_config({}, None)


def test_flags_override_file(tmp_path):
    path = write_config(tmp_path, "learning_rate = 0.5\nmode = base-know\n")
    cfg = resolve_config({"learning_rate": 0.125}, path)
    assert cfg.learning_rate == 0.125
    assert cfg.mode == "base-know"


def test_resolved_config_is_validated(tmp_path):
    with pytest.raises(ConfigError):
        resolve_config({}, write_config(tmp_path, "mode = sideways\n"))
    with pytest.raises(ConfigError):
        resolve_config({}, write_config(tmp_path, "fractions = 0.0\n"))
    with pytest.raises(ConfigError):
        resolve_config({}, write_config(tmp_path, "node_budgets = 0\n"))
    with pytest.raises(ConfigError):
        resolve_config({}, write_config(tmp_path, "split = validation\n"))
    with pytest.raises(ConfigError):
        resolve_config({}, write_config(tmp_path, "modes = nonsense\n"))


def test_require_names_the_flag():
    cfg = ExperimentConfig()
    with pytest.raises(ConfigError, match=r"--kg"):
        cfg.require("kg")
    with pytest.raises(ConfigError, match=r"--node-features"):
        cfg.require("node_features")


def test_train_config_projection():
    cfg = ExperimentConfig(mode="act-know", learning_rate=0.75, max_nodes=9, kg="x.tsv")
    tc = train_config(cfg)
    assert isinstance(tc, TrainConfig)
    assert type(tc) is TrainConfig
    assert tc.mode == "act-know"
    assert tc.learning_rate == 0.75
    assert tc.max_nodes == 9
    assert not hasattr(tc, "kg")

import pytest

from dualaqd.config import build_config, dump_config, load_config, parse_config_text
from dualaqd.exceptions import ConfigurationError
from dualaqd.training import TrainConfig


def test_defaults():
    cfg, settings = load_config()
    assert cfg == TrainConfig()
    assert (cfg.batch_size, cfg.tau, cfg.mc_passes, cfg.max_epochs) == (16, 0.05, 100, 500)
    assert settings["alphas"] == [0.001, 0.005, 0.01, 0.05, 0.1]
    assert settings["target_column"] == "y"


def test_grammar(tmp_path):
    p = tmp_path / "c.txt"
    p.write_text("# comment\n\nalpha = 0.05  # trailing\nhidden = 32, 16\nbatch_sorting = off\n"
                 "f_epochs = none\nmethods = dualaqd, qd\n")
    cfg, settings = load_config(p)
    assert cfg.alpha == 0.05 and cfg.hidden == (32, 16)
    assert cfg.batch_sorting is False and cfg.f_epochs is None
    assert settings["methods"] == ["dualaqd", "qd"]


def test_overrides_win(tmp_path):
    p = tmp_path / "c.txt"
    p.write_text("alpha = 0.05\n")
    cfg, _ = load_config(p, {"alpha": "0.1", "seed": 3})
    assert cfg.alpha == 0.1 and cfg.seed == 3


def test_every_problem_reported():
    with pytest.raises(ConfigurationError) as exc:
        build_config({"colour": "red", "alpha": "fast", "batch_size": "0", "tau": "2"})
    msg = str(exc.value)
    assert "unknown key 'colour'" in msg and "'alpha'" in msg


def test_range_problems_listed_together():
    with pytest.raises(ConfigurationError) as exc:
        build_config({"batch_size": "0", "tau": "2"})
    assert "batch_size" in str(exc.value) and "tau" in str(exc.value)


def test_unknown_loss_kind_lists_valid_values():
    with pytest.raises(ConfigurationError, match="dualaqd.*qd.*qdplus.*mcdropout_pi"):
        build_config({"loss_kind": "pinball"})


def test_syntax_errors():
    with pytest.raises(ConfigurationError, match="c.txt:2.*expected"):
        parse_config_text("alpha = 1\njunk\n", "c.txt")
    with pytest.raises(ConfigurationError, match="duplicate"):
        parse_config_text("alpha = 1\nalpha = 2\n")


def test_bad_boolean():
    with pytest.raises(ConfigurationError, match="batch_sorting"):
        build_config({"batch_sorting": "maybe"})


def test_missing_file(tmp_path):
    with pytest.raises(ConfigurationError, match="cannot read"):
        load_config(tmp_path / "none.txt")


def test_dump_round_trip():
    cfg = TrainConfig(alpha=0.05, hidden=(8, 4), f_epochs=None, batch_sorting=False)
    settings = {"target_column": "t", "methods": ["qd"], "alphas": [0.1, 0.01]}
    cfg2, settings2 = build_config(parse_config_text(dump_config(cfg, settings)))
    assert cfg2 == cfg
    assert settings2 == settings

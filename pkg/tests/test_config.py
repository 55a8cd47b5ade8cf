import os

import pytest

from relufit.config import load_sweep_config, resolve_out_dir, resolve_parallelism
from relufit.errors import ConfigError


def write(tmp_path, text):
    p = tmp_path / "sweep.toml"
    p.write_text(text)
    return str(p)


GOOD = """
[sweep]
d = [1, 2]
M = [2]
sigma = [0.1, 0.2]
epsilon = [1.0, 0.1]
depth = 2
scheme = "four_m"
trials = 4
n_start = 8
n_cap = 64
seed = 99
parallelism = 2
out_dir = "runs"
n_mc = 512
"""


def test_load_full_config(tmp_path):
    cfg = load_sweep_config(write(tmp_path, GOOD))
    assert cfg.d_list == [1, 2]
    assert cfg.m_list == [2]
    assert cfg.sigma_list == [0.1, 0.2]
    assert cfg.eps_targets == [1.0, 0.1]
    assert cfg.depth == 2
    assert cfg.scheme == "four_m"
    assert cfg.trials == 4
    assert cfg.n_start == 8
    assert cfg.n_cap == 64
    assert cfg.master_seed == 99
    assert cfg.parallelism == 2
    assert cfg.out_dir == "runs"
    assert cfg.n_mc == 512


def test_minimal_config_defaults(tmp_path):
    cfg = load_sweep_config(write(tmp_path, "[sweep]\nd = [2]\nM = [2]\n"))
    assert cfg.sigma_list == [0.1]
    assert cfg.eps_targets == [1.0]
    assert cfg.depth == 1
    assert cfg.scheme == "tune"
    assert cfg.out_dir == ""  # unset: the env var may fill it in


def test_missing_file():
    with pytest.raises(ConfigError):
        load_sweep_config("/nonexistent/sweep.toml")


def test_bad_toml(tmp_path):
    with pytest.raises(ConfigError):
        load_sweep_config(write(tmp_path, "[sweep\nd = ["))


def test_missing_required_keys(tmp_path):
    with pytest.raises(ConfigError):
        load_sweep_config(write(tmp_path, "[sweep]\nd = [2]\n"))
    with pytest.raises(ConfigError):
        load_sweep_config(write(tmp_path, "[sweep]\nM = [2]\n"))


def test_top_level_keys_accepted(tmp_path):
    # the [sweep] table is conventional but top-level keys also work
    cfg = load_sweep_config(write(tmp_path, "d = [2]\nM = [2]\n"))
    assert cfg.d_list == [2]


def test_rejects_bad_values(tmp_path):
    bad = [
        "[sweep]\nd = [0]\nM = [2]\n",
        "[sweep]\nd = [2]\nM = [2]\nsigma = [-0.1]\n",
        "[sweep]\nd = [2]\nM = [2]\nepsilon = [0.0]\n",
        "[sweep]\nd = [2]\nM = [2]\ndepth = 4\n",
        '[sweep]\nd = [2]\nM = [2]\nscheme = "best"\n',
        "[sweep]\nd = [2]\nM = [2]\ntrials = 0\n",
        "[sweep]\nd = [2]\nM = [2]\nn_start = 1\n",
        "[sweep]\nd = [2]\nM = [2]\nn_start = 64\nn_cap = 32\n",
        "[sweep]\nd = [true]\nM = [2]\n",
        '[sweep]\nd = "2"\nM = [2]\n',
    ]
    for text in bad:
        with pytest.raises(ConfigError):
            load_sweep_config(write(tmp_path, text))


def test_out_dir_precedence(monkeypatch):
    monkeypatch.delenv("RELUFIT_OUT", raising=False)
    assert resolve_out_dir(None, None) == "results"
    assert resolve_out_dir(None, "") == "results"
    assert resolve_out_dir(None, "from_config") == "from_config"
    assert resolve_out_dir("from_flag", "from_config") == "from_flag"
    monkeypatch.setenv("RELUFIT_OUT", "from_env")
    assert resolve_out_dir(None, None) == "from_env"
    assert resolve_out_dir(None, "") == "from_env"
    # explicit config beats the environment; the flag beats both
    assert resolve_out_dir(None, "from_config") == "from_config"
    assert resolve_out_dir("from_flag", None) == "from_flag"


def test_resolve_parallelism():
    assert resolve_parallelism(3) == 3
    assert resolve_parallelism(1) == 1
    auto = resolve_parallelism(0)
    assert auto >= 1

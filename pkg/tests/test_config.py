import pytest
from hypothesis import given, settings, strategies as st

from dunklmax.config import ConfigError, ExperimentConfig


def test_defaults_are_valid():
    cfg = ExperimentConfig()
    assert cfg.experiment.kind == "verify"
    assert cfg.multiplicity_setting().D == 3.0
    assert cfg.dyadic().J == cfg.grids.levels
    assert "log2048" in cfg.grid_id


def test_ini_round_trip(tmp_path):
    cfg = ExperimentConfig().with_updates(
        setting={"d": 2, "multiplicities": (0.5, 0.25)},
        family={"seed": 11, "kinds": ("gaussian", "power")},
        experiment={"kind": "sweep-j", "p_list": (1.7, 2.2), "strict": True})
    path = tmp_path / "c.ini"
    cfg.save(path)
    assert ExperimentConfig.load(path) == cfg
    assert ExperimentConfig.from_dict(cfg.to_dict()) == cfg


@given(seed=st.integers(0, 2 ** 31), n=st.integers(4, 10 ** 5),
       tol=st.floats(1e-300, 1e3, allow_nan=False), strict=st.booleans(),
       ps=st.lists(st.floats(1.0, 50.0), min_size=1, max_size=5))
@settings(max_examples=60, deadline=None)
def test_round_trip_is_lossless(seed, n, tol, strict, ps):
    cfg = ExperimentConfig().with_updates(family={"seed": seed}, grids={"n": n},
                                          tolerances={"plancherel": tol},
                                          experiment={"strict": strict, "p_list": tuple(ps)})
    assert ExperimentConfig.from_ini(cfg.to_ini()) == cfg


def test_partial_file_keeps_defaults():
    cfg = ExperimentConfig.from_ini("[family]\nseed = 7\n")
    assert cfg.family.seed == 7 and cfg.grids == ExperimentConfig().grids


def test_uniform_multiplicity_expands():
    cfg = ExperimentConfig.from_ini("[setting]\nd = 3\nmultiplicities = 0.5\n")
    assert cfg.multiplicity_setting().multiplicities == (0.5, 0.5, 0.5)


@pytest.mark.parametrize("text", [
    "[setting\nd = 1\n",
    "[nonsense]\na = 1\n",
    "[setting]\ncolour = red\n",
    "[grids]\nn = many\n",
    "[experiment]\nstrict = perhaps\n",
    "[experiment]\nkind = sweep-q\n",
    "[experiment]\np_list = 0.5\n",
    "[experiment]\nj_min = 5\nj_max = 2\n",
    "[grids]\nr_min = 10\nr_max = 1\n",
    "[grids]\nlevels = 40\n",
    "[setting]\nd = 2\nmultiplicities = 1, 2, 3\n",
    "[setting]\nmultiplicities = -1\n",
    "[family]\nkinds = gaussian, cube\n",
    "[family]\nwidths = 0.5\n",
])
def test_malformed_configs_raise(text):
    with pytest.raises(ConfigError):
        ExperimentConfig.from_ini(text)


def test_missing_file_and_bad_dict(tmp_path):
    with pytest.raises(ConfigError):
        ExperimentConfig.load(tmp_path / "absent.ini")
    with pytest.raises(ConfigError):
        ExperimentConfig.from_dict({"grids": {"bogus": 1}})

import json

import pytest

from relief_layout.config import PipelineConfig, build_config, load_config, merge_overrides, read_config_file
from relief_layout.errors import ConfigError


def test_defaults():
    cfg = PipelineConfig()
    assert cfg.seed == 0 and cfg.evolution.seed == 0 and cfg.coupling.pair_convention == "ordered"


def test_seed_propagates():
    cfg = build_config({"seed": 9, "evolution": {"generations": 3}})
    assert cfg.evolution.seed == 9 and cfg.evolution.generations == 3


@pytest.mark.parametrize("seed", ["1", 1.5, True, None])
def test_invalid_seed(seed):
    with pytest.raises(ConfigError):
        build_config({"seed": seed})


@pytest.mark.parametrize("raw", [{"bogus": 1}, {"evolution": {"bogus": 1}}, {"evolution": 3},
                                 {"stages": {"skip_forecast": "yes"}}, {"classify": {"variant": "x"}},
                                 {"export": {"formats": ["xml"]}}, {"inputs": {"bundle": "/no/such/dir"}},
                                 {"evolution": {"population_size": 3}}])
def test_invalid_values(raw):
    with pytest.raises(ConfigError):
        build_config(raw)


def test_demand_file_requires_skip(tmp_path):
    f = tmp_path / "d.csv"
    f.write_text("area_id,material_id,demand\n")
    with pytest.raises(ConfigError):
        build_config({"inputs": {"demand_file": str(f)}})
    assert build_config({"inputs": {"demand_file": str(f)}, "stages": {"skip_forecast": True}}).demand_file == f


def test_toml_and_json_detected(tmp_path):
    t = tmp_path / "c.toml"
    t.write_text('seed = 4\n[evolution]\ngenerations = 7\n')
    j = tmp_path / "c.json"
    j.write_text(json.dumps({"seed": 4, "evolution": {"generations": 7}}))
    anon = tmp_path / "c.cfg"
    anon.write_text(t.read_text())
    for p in (t, j, anon):
        assert read_config_file(p) == {"seed": 4, "evolution": {"generations": 7}}
    bad = tmp_path / "bad.toml"
    bad.write_text("seed = = 1")
    with pytest.raises(ConfigError):
        read_config_file(bad)


def test_flags_win_and_paths_resolve(tmp_path, example_dir):
    t = tmp_path / "c.toml"
    t.write_text(f'seed = 3\nout = "runs"\n[inputs]\nbundle = "{example_dir}"\n[evolution]\ngenerations = 7\n')
    cfg = load_config(t, {"seed": 5, "evolution.generations": None})
    assert cfg.seed == 5 and cfg.evolution.seed == 5 and cfg.evolution.generations == 7
    assert cfg.out == tmp_path / "runs"
    assert cfg.companion("judgment") == example_dir / "judgment.csv"


def test_merge_overrides_ignores_none():
    assert merge_overrides({"seed": 1}, {"seed": None, "a.b": 2}) == {"seed": 1, "a": {"b": 2}}

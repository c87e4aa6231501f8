import pytest

from wsngame.config import SimConfig, fault_count, load_config, parse_malicious, seed_from_env
from wsngame.errors import ConfigError


def test_empty_file_gives_defaults(tmp_path):
    path = tmp_path / "empty.yaml"
    path.write_text("")
    cfg = load_config(str(path))
    assert cfg == SimConfig()
    assert (cfg.n_cms, cfg.packet_len_bits, cfg.t0_seconds, cfg.dr_bps) == (10, 1024, 580e-6, 250000)
    assert (cfg.v_volts, cfg.alpha, cfg.beta, cfg.eb_joules) == (3.0, 0.6, 0.4, 50e-9)
    assert (cfg.d0_m, cfg.d_ich_m, cfg.pl_f_db, cfg.power_level, cfg.tp) == (10, 125, 55, 31, 100)
    assert cfg.n_rounds == 110
    assert cfg.profile.currents_ma[31] == 17.4


def test_c_not_above_n_names_the_constraint(tmp_path):
    path = tmp_path / "c.yaml"
    path.write_text("c_factor: 5\nn_cms: 10\n")
    with pytest.raises(ConfigError, match=r"c > \|N\|"):
        load_config(str(path))


def test_environment_and_doi_lookup():
    cfg = load_config(overrides={"env_name": "UL", "doi_index": 3})
    env = cfg.environment
    assert (env.n, env.sigma_db, env.pn_dbm) == (1.45, 2.45, -92.0)
    assert cfg.doi == 0.004


def test_every_violation_is_reported():
    with pytest.raises(ConfigError) as err:
        SimConfig(tp=0, alpha=0.9, env_name="XX", p_drop=2.0)
    names = {name for name, _ in err.value.violations}
    assert {"tp", "alpha", "env_name", "p_drop"} <= names


def test_unknown_and_nested_keys_rejected(tmp_path):
    path = tmp_path / "bad.yaml"
    path.write_text("nodes: 3\n")
    with pytest.raises(ConfigError, match="unknown"):
        load_config(str(path))
    path.write_text("seed: {a: 1}\n")
    with pytest.raises(ConfigError, match="nested"):
        load_config(str(path))


def test_unparsable_file(tmp_path):
    path = tmp_path / "broken.yaml"
    path.write_text("a: [1,\n")
    with pytest.raises(ConfigError, match="cannot parse"):
        load_config(str(path))


def test_missing_file():
    with pytest.raises(ConfigError, match="cannot read"):
        load_config("/nonexistent/cfg.yaml")


def test_overrides_win_over_file(tmp_path):
    path = tmp_path / "c.yaml"
    path.write_text("seed: 3\nenv_name: ON\nmalicious: '3,7'\n")
    cfg = load_config(str(path), {"seed": 9})
    assert cfg.seed == 9 and cfg.env_name == "ON" and cfg.malicious == (3, 7)


def test_custom_environment_row():
    cfg = SimConfig(env_name="lab", env_params={"n": 2.0, "sigma_db": 1.0, "pn_dbm": -90.0})
    assert cfg.environment.n == 2.0
    hash(cfg)


def test_too_many_roles():
    with pytest.raises(ConfigError, match="exceed"):
        SimConfig(malicious=9, hw_fault_fraction=0.2)


def test_role_overlap_rejected():
    with pytest.raises(ConfigError, match="both"):
        SimConfig(malicious=(1, 2), fault_ids=(2,))


def test_fault_count_rounding():
    assert fault_count(10, 0.2) == 2
    assert fault_count(10, 0.25) == 3
    assert fault_count(10, 0.0) == 0


def test_parse_malicious():
    assert parse_malicious("2") == 2
    assert parse_malicious("3,7") == (3, 7)


def test_seed_from_env(monkeypatch):
    monkeypatch.setenv("SIM_SEED", "17")
    assert seed_from_env() == 17
    monkeypatch.setenv("SIM_SEED", "x")
    with pytest.raises(ConfigError):
        seed_from_env()
    monkeypatch.delenv("SIM_SEED")
    assert seed_from_env(5) == 5

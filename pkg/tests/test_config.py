import pytest

from config import SEED_ENV_VAR, default_config, load_config, resolve_seed


def test_defaults():
    cfg = default_config()
    assert cfg.sim.max_qubits == 24
    assert cfg.shor.max_qubits == 18
    assert cfg.prior.epsilon == 0.05
    assert cfg.agent.epsilon_override is None
    assert cfg.run.seed is None


def test_load_partial_file(tmp_path):
    path = tmp_path / "cfg.yaml"
    path.write_text("prior:\n  k: 5\nagent:\n  epsilon_override: 0.1\nrun:\n  seed: 11\n", encoding="utf-8")
    cfg = load_config(str(path))
    assert cfg.prior.k == 5.0
    assert cfg.prior.precision == 6
    assert cfg.agent.epsilon_override == 0.1
    assert cfg.run.seed == 11
    assert cfg.retries.grover == 10


def test_shipped_config_matches_defaults(machines_dir):
    assert load_config(str(machines_dir.parent / "config.yaml")) == default_config()


def test_empty_file(tmp_path):
    path = tmp_path / "empty.yaml"
    path.write_text("", encoding="utf-8")
    assert load_config(str(path)) == default_config()


def test_seed_precedence(tmp_path, monkeypatch):
    path = tmp_path / "cfg.yaml"
    path.write_text("run:\n  seed: 11\n", encoding="utf-8")
    cfg = load_config(str(path))
    monkeypatch.delenv(SEED_ENV_VAR, raising=False)
    assert resolve_seed(None, default_config()) == 0
    assert resolve_seed(None, cfg) == 11
    monkeypatch.setenv(SEED_ENV_VAR, "23")
    assert resolve_seed(None, cfg) == 23
    assert resolve_seed(5, cfg) == 5


def test_bad_seed_in_environment(monkeypatch):
    monkeypatch.setenv(SEED_ENV_VAR, "abc")
    with pytest.raises(ValueError):
        resolve_seed(None, default_config())


def test_malformed_yaml(tmp_path):
    path = tmp_path / "broken.yaml"
    path.write_text("agent: [unclosed\n  tree_budget: 3\n", encoding="utf-8")
    with pytest.raises(ValueError, match="not valid YAML"):
        load_config(str(path))


def test_top_level_must_be_a_mapping(tmp_path):
    path = tmp_path / "list.yaml"
    path.write_text("- sim\n- prior\n", encoding="utf-8")
    with pytest.raises(ValueError, match="mapping"):
        load_config(str(path))

import logging

import pytest

from src.core.config import (
    ExperimentKind,
    Settings,
    build_experiment_config,
    experiment_config_from_snapshot,
)
from src.core.exceptions import ConfigError


@pytest.fixture
def yaml_settings(tmp_path):
    def make(text):
        path = tmp_path / "config.yaml"
        path.write_text(text)
        return Settings(str(path))
    return make


def test_missing_file_gives_defaults(tmp_path):
    settings = Settings(str(tmp_path / "absent.yaml"))
    assert settings.agent.provider == "synthetic"
    assert settings.inverse.samples_positive == 43
    assert settings.inverse.samples_negative == 42
    assert settings.fitting.restarts == 20


def test_environment_wins_over_yaml(yaml_settings, monkeypatch):
    monkeypatch.setenv("AGENT_MODEL", "env-model")
    settings = yaml_settings("agent:\n  model: yaml-model\n  temperature: 0.3\n")
    assert settings.agent.model == "env-model"
    assert settings.agent.temperature == 0.3


def test_unknown_yaml_keys_are_ignored(yaml_settings, caplog):
    settings = yaml_settings("fitting:\n  restarts: 4\n  annealing: true\n")
    with caplog.at_level(logging.WARNING):
        assert settings.fitting.restarts == 4
    assert "annealing" in caplog.text


def test_invalid_yaml(yaml_settings):
    with pytest.raises(ConfigError):
        yaml_settings("agent: [unclosed\n").agent
    with pytest.raises(ConfigError):
        yaml_settings("- just\n- a list\n").agent
    with pytest.raises(ConfigError):
        yaml_settings("agent:\n  temperature: 5\n").agent


@pytest.mark.parametrize(
    "task, kind, prompt_task",
    [
        ("1", ExperimentKind.FORWARD_TASK_1, "predict-individual"),
        ("2", ExperimentKind.FORWARD_TASK_2, "predict-proportion"),
        ("act-as-participant", ExperimentKind.FORWARD_TASK_3, "act-as-participant"),
    ],
)
def test_task_aliases(tmp_path, task, kind, prompt_task):
    config = build_experiment_config(Settings(str(tmp_path / "absent.yaml")), "forward-task-1", {"task": task})
    assert config.kind is kind
    assert config.forward.task == prompt_task


def test_unknown_task_and_kind(tmp_path):
    settings = Settings(str(tmp_path / "absent.yaml"))
    with pytest.raises(ConfigError):
        build_experiment_config(settings, "forward-task-1", {"task": "4"})
    with pytest.raises(ConfigError):
        build_experiment_config(settings, "forward-task-9")


def test_agent_override(tmp_path):
    settings = Settings(str(tmp_path / "absent.yaml"))
    config = build_experiment_config(settings, "forward-task-1", {"agent": "luce-noisy", "temperature": 0.0})
    assert config.agent.provider == "synthetic"
    assert config.agent.synthetic_kind == "luce-noisy"
    assert config.agent.temperature == 0.0

    config = build_experiment_config(settings, "forward-task-1", {"agent": "openai"})
    assert config.agent.provider == "openai"


def test_invalid_override_values(tmp_path):
    settings = Settings(str(tmp_path / "absent.yaml"))
    with pytest.raises(ConfigError):
        build_experiment_config(settings, "forward-task-1", {"temperature": 3.0})
    with pytest.raises(ConfigError):
        build_experiment_config(settings, "inverse-positive", {"samples": 0})
    with pytest.raises(ConfigError):
        build_experiment_config(settings, "inverse-positive", {"inverse.grid_points": 40})


def test_default_samples_per_context(tmp_path):
    settings = Settings(str(tmp_path / "absent.yaml"))
    assert build_experiment_config(settings, "inverse-positive").samples == 43
    negative = build_experiment_config(settings, "inverse-negative")
    assert negative.samples == 42
    assert negative.inverse.context == "negative"
    assert build_experiment_config(settings, "inverse-negative", {"samples": 3}).samples == 3


def test_out_dir_and_section_overrides(tmp_path, caplog):
    settings = Settings(str(tmp_path / "absent.yaml"))
    config = build_experiment_config(
        settings, "fit", {"seed": 9, "fitting.workers": 2, "bogus": 1}
    )
    assert config.out_dir.endswith("fit")
    assert config.fitting.seed == config.forward.seed == config.inverse.seed == 9
    assert config.fitting.workers == 2
    assert "bogus" in caplog.text


def test_snapshot_restores_the_config(tmp_path):
    settings = Settings(str(tmp_path / "absent.yaml"))
    config = build_experiment_config(settings, "ablation", {"temperatures": [0.0, 1.0], "persona": "economist"})
    restored = experiment_config_from_snapshot(config.snapshot())
    assert restored == config
    assert restored.temperatures == [0.0, 1.0]

    with pytest.raises(ConfigError):
        experiment_config_from_snapshot({"kind": "fit"})

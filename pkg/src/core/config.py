"""Configuration management - typed sections via pydantic-settings, YAML fallback"""

import logging
from enum import Enum
from pathlib import Path
from typing import Optional, List, Dict, Any, Type, TypeVar

import yaml
from pydantic import BaseModel, Field, ValidationError as PydanticValidationError
from pydantic_settings import BaseSettings, SettingsConfigDict

from .exceptions import ConfigError

logger = logging.getLogger(__name__)

SectionT = TypeVar("SectionT", bound=BaseSettings)


class AgentSettings(BaseSettings):
    """Agent endpoint configuration"""

    model_config = SettingsConfigDict(env_prefix="AGENT_")

    provider: str = Field(default="synthetic", description="openai, http or synthetic")
    base_url: Optional[str] = Field(default=None, description="Endpoint base address")
    chat_path: str = Field(default="/chat/completions", description="Chat-completion path for the http provider")
    model: str = Field(default="gpt-4o", description="Model name sent with every request")
    temperature: float = Field(default=0.7, ge=0, le=2, description="Sampling temperature")
    completions: int = Field(default=1, ge=1, description="Completions per query when not set by the task")
    timeout: float = Field(default=60.0, gt=0, description="Request timeout in seconds")
    retries: int = Field(default=3, ge=0, description="Retry budget for transient failures")
    max_in_flight: int = Field(default=8, ge=1, description="Concurrent requests")
    auth_header: str = Field(default="Authorization", description="Header carrying the bearer token")
    api_key_env: str = Field(default="OPENAI_API_KEY", description="Environment variable holding the API key")
    synthetic_kind: str = Field(default="max-ev", description="Synthetic agent kind")
    beta: float = Field(default=1.0, ge=0, description="Sensitivity of the luce-noisy synthetic agent")
    split: float = Field(default=0.5, ge=0, le=1, description="P(A) answered by the proportion synthetic agent")


class ForwardSettings(BaseSettings):
    """Forward (risky choice) experiment configuration"""

    model_config = SettingsConfigDict(env_prefix="FORWARD_")

    dataset_path: Optional[str] = Field(default=None, description="choices13k csv or canonical jsonl")
    task: str = Field(default="predict-individual", description="Forward task id")
    style: str = Field(default="zero-shot", description="zero-shot or chain-of-thought")
    persona: Optional[str] = Field(default=None, description="Noun phrase replacing 'A person'")
    seed: int = Field(default=0, description="Shuffle seed")
    limit: Optional[int] = Field(default=None, ge=1, description="Only use the first N filtered problems")
    fixture_size: int = Field(default=200, ge=10, description="Rows of the synthetic fixture")


class InverseSettings(BaseSettings):
    """Inverse (preference inference) experiment configuration"""

    model_config = SettingsConfigDict(env_prefix="INVERSE_")

    context: str = Field(default="positive", description="positive (candies) or negative (shocks)")
    style: str = Field(default="zero-shot", description="zero-shot or chain-of-thought")
    samples_positive: int = Field(default=43, ge=1, description="Samples for the positive context")
    samples_negative: int = Field(default=42, ge=1, description="Samples for the negative context")
    seed: int = Field(default=0, description="Shuffle seed")
    score_method: str = Field(default="grid", description="grid or mc")
    score_kind: str = Field(default="absolute", description="Score kind answered by the oracle agent")
    grid_points: int = Field(default=21, ge=3, le=30, description="Grid points per dimension")
    mc_samples: int = Field(default=100_000, ge=1000, description="Monte Carlo samples")
    beta: float = Field(default=1.0, gt=0, description="Luce sensitivity")


class FittingSettings(BaseSettings):
    """Behavioral model fitting configuration"""

    model_config = SettingsConfigDict(env_prefix="FITTING_")

    restarts: int = Field(default=20, ge=1, description="Random starts per family")
    max_iter: int = Field(default=500, ge=1, description="Simplex iterations per start")
    tolerance: float = Field(default=1e-6, gt=0, description="Simplex diameter at convergence")
    seed: int = Field(default=0, description="Root seed for restarts")
    workers: int = Field(default=1, ge=1, description="Restarts fitted concurrently")


class LoggingConfig(BaseSettings):
    """Logging configuration"""

    level: str = Field(default="INFO", description="Log level")
    file: str = Field(default="./logs/toolkit.log", description="Log file path")


class AppConfig(BaseSettings):
    """Application configuration"""

    model_config = SettingsConfigDict(env_prefix="APP_")

    output_dir: str = Field(default="./runs", description="Default experiment output directory")
    logging: LoggingConfig = Field(default_factory=LoggingConfig)


class Settings:
    """Global configuration manager: environment first, YAML fills the rest"""

    def __init__(self, config_path: Optional[str] = None):
        """
        Args:
            config_path: YAML file; searched for next to the working directory when omitted
        """
        self._config_path = config_path or self._find_config_path()
        self._yaml: Optional[dict] = None
        self._agent: Optional[AgentSettings] = None
        self._forward: Optional[ForwardSettings] = None
        self._inverse: Optional[InverseSettings] = None
        self._fitting: Optional[FittingSettings] = None
        self._app: Optional[AppConfig] = None

    @staticmethod
    def _find_config_path() -> str:
        possible_paths = [
            "config.yaml",
            "config.local.yaml",
            "../config.yaml",
            "../config.local.yaml",
        ]

        for path in possible_paths:
            full_path = Path(path).resolve()
            if full_path.exists():
                return str(full_path)

        return "config.yaml"

    @property
    def config_path(self) -> str:
        return self._config_path

    def load_yaml(self) -> dict:
        """Load the YAML file once; a missing file is an empty config"""
        if self._yaml is None:
            config_file = Path(self._config_path)
            if not config_file.exists():
                self._yaml = {}
            else:
                try:
                    with open(config_file, "r", encoding="utf-8") as f:
                        self._yaml = yaml.safe_load(f) or {}
                except yaml.YAMLError as e:
                    raise ConfigError("Could not parse the configuration file", f"{config_file}: {e}")
                if not isinstance(self._yaml, dict):
                    raise ConfigError("Configuration file must hold a mapping", str(config_file))
        return self._yaml

    def _section(self, cls: Type[SectionT], name: str) -> SectionT:
        """Build a section; YAML values fill only fields the environment left unset"""
        try:
            from_env = cls()
            yaml_values = self.load_yaml().get(name) or {}
            fill = {
                key: value
                for key, value in yaml_values.items()
                if key in cls.model_fields and key not in from_env.model_fields_set and value is not None
            }
            unknown = set(yaml_values) - set(cls.model_fields)
            if unknown:
                logger.warning(f"Ignoring unknown keys in [{name}]: {', '.join(sorted(unknown))}")
            return cls(**fill) if fill else from_env
        except PydanticValidationError as e:
            raise ConfigError(f"Invalid [{name}] configuration", str(e))

    @property
    def agent(self) -> AgentSettings:
        if self._agent is None:
            self._agent = self._section(AgentSettings, "agent")
        return self._agent

    @property
    def forward(self) -> ForwardSettings:
        if self._forward is None:
            self._forward = self._section(ForwardSettings, "forward")
        return self._forward

    @property
    def inverse(self) -> InverseSettings:
        if self._inverse is None:
            self._inverse = self._section(InverseSettings, "inverse")
        return self._inverse

    @property
    def fitting(self) -> FittingSettings:
        if self._fitting is None:
            self._fitting = self._section(FittingSettings, "fitting")
        return self._fitting

    @property
    def app(self) -> AppConfig:
        if self._app is None:
            self._app = self._section(AppConfig, "app")
        return self._app

    def ensure_directories(self) -> None:
        for directory in (self.app.output_dir, Path(self.app.logging.file).parent):
            Path(directory).mkdir(parents=True, exist_ok=True)


class ExperimentKind(str, Enum):
    FORWARD_TASK_1 = "forward-task-1"
    FORWARD_TASK_2 = "forward-task-2"
    FORWARD_TASK_3 = "forward-task-3"
    INVERSE_POSITIVE = "inverse-positive"
    INVERSE_NEGATIVE = "inverse-negative"
    FIT = "fit"
    ABLATION = "ablation"

    @property
    def forward_task(self) -> Optional[str]:
        return {
            ExperimentKind.FORWARD_TASK_1: "predict-individual",
            ExperimentKind.FORWARD_TASK_2: "predict-proportion",
            ExperimentKind.FORWARD_TASK_3: "act-as-participant",
            ExperimentKind.ABLATION: "predict-individual",
        }.get(self)

    @property
    def context(self) -> Optional[str]:
        return {
            ExperimentKind.INVERSE_POSITIVE: "positive",
            ExperimentKind.INVERSE_NEGATIVE: "negative",
        }.get(self)


# --task accepts the short numeric ids as well as the prompt task names
TASK_ALIASES = {
    "1": ExperimentKind.FORWARD_TASK_1,
    "2": ExperimentKind.FORWARD_TASK_2,
    "3": ExperimentKind.FORWARD_TASK_3,
    "predict-individual": ExperimentKind.FORWARD_TASK_1,
    "predict-proportion": ExperimentKind.FORWARD_TASK_2,
    "act-as-participant": ExperimentKind.FORWARD_TASK_3,
}


class ExperimentConfig(BaseModel):
    """Everything one run needs, snapshotted into its record"""

    kind: ExperimentKind
    agent: AgentSettings
    forward: ForwardSettings
    inverse: InverseSettings
    fitting: FittingSettings
    out_dir: str
    samples: int = Field(default=1, ge=1)
    temperatures: List[float] = Field(default_factory=lambda: [0.0, 0.5, 1.0, 1.5, 2.0])

    def snapshot(self) -> Dict[str, Any]:
        return self.model_dump(mode="json")


def build_experiment_config(
    settings: Settings,
    kind: "ExperimentKind | str",
    overrides: Optional[Dict[str, Any]] = None,
) -> ExperimentConfig:
    """Combine settings sections with command-line overrides

    Recognised override keys: agent, task, seed, out, samples, temperature,
    persona, style, dataset, limit, kind-specific keys of the sections
    (``section.field``).

    Raises:
        ConfigError: Unknown kind or invalid values
    """
    overrides = {k: v for k, v in (overrides or {}).items() if v is not None}
    try:
        kind = ExperimentKind(kind)
    except ValueError:
        raise ConfigError("Unknown experiment kind", str(kind))

    agent = settings.agent.model_dump()
    forward = settings.forward.model_dump()
    inverse = settings.inverse.model_dump()
    fitting = settings.fitting.model_dump()

    if "task" in overrides:
        task = str(overrides.pop("task")).lower()
        task_kind = TASK_ALIASES.get(task)
        if task_kind is None:
            raise ConfigError("Unknown forward task", task)
        if kind.forward_task is not None and kind is not ExperimentKind.ABLATION:
            kind = task_kind
        forward["task"] = task_kind.forward_task
    elif kind.forward_task is not None and kind is not ExperimentKind.ABLATION:
        forward["task"] = kind.forward_task
    if "agent" in overrides:
        name = str(overrides.pop("agent"))
        if name in ("openai", "http", "synthetic"):
            agent["provider"] = name
        else:
            agent["provider"] = "synthetic"
            agent["synthetic_kind"] = name
    if "temperature" in overrides:
        agent["temperature"] = overrides.pop("temperature")
    if "seed" in overrides:
        seed = overrides.pop("seed")
        forward["seed"] = inverse["seed"] = fitting["seed"] = seed
    if "persona" in overrides:
        forward["persona"] = overrides.pop("persona")
    if "style" in overrides:
        forward["style"] = inverse["style"] = overrides.pop("style")
    if "dataset" in overrides:
        forward["dataset_path"] = overrides.pop("dataset")
    if "limit" in overrides:
        forward["limit"] = overrides.pop("limit")
    if kind.context:
        inverse["context"] = kind.context

    samples = overrides.pop("samples", None)
    if samples is None:
        samples = inverse["samples_negative"] if inverse["context"] == "negative" else inverse["samples_positive"]
    out_dir = overrides.pop("out", None) or str(Path(settings.app.output_dir) / kind.value)
    temperatures = overrides.pop("temperatures", None)

    sections = {"agent": agent, "forward": forward, "inverse": inverse, "fitting": fitting}
    for key in list(overrides):
        section, _, field = key.partition(".")
        if section in sections and field in sections[section]:
            sections[section][field] = overrides.pop(key)
    if overrides:
        logger.warning(f"Unused overrides: {', '.join(sorted(overrides))}")

    try:
        data = dict(
            kind=kind,
            agent=AgentSettings.model_validate(agent),
            forward=ForwardSettings.model_validate(forward),
            inverse=InverseSettings.model_validate(inverse),
            fitting=FittingSettings.model_validate(fitting),
            out_dir=out_dir,
            samples=samples,
        )
        if temperatures is not None:
            data["temperatures"] = temperatures
        return ExperimentConfig(**data)
    except PydanticValidationError as e:
        raise ConfigError("Invalid experiment configuration", str(e))


def experiment_config_from_snapshot(snapshot: Dict[str, Any]) -> ExperimentConfig:
    try:
        return ExperimentConfig.model_validate(snapshot)
    except PydanticValidationError as e:
        raise ConfigError("Invalid configuration snapshot", str(e))


# Global configuration instance
settings = Settings()

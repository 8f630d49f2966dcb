"""Application config: one JSON or TOML file wiring model, methods and experiments.

Lookup order is an explicit path, then ``$OBER_CONFIG``, then the bundled
demo config.  Relative paths inside the file resolve against the file's
own directory.
"""

from __future__ import annotations

import json
import os
import sys
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

from .errors import ConfigError
from .experiment import ExperimentConfig
from .outcomes import LearningModel, load_model
from .recommenders import RecommenderConfig
from .simulator import SimulationConfig

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

ENV_VAR = "OBER_CONFIG"


def bundled_config_path() -> Path:
    return Path(str(resources.files("ober") / "data" / "demo_config.json"))


def read_config_file(path: str | Path) -> dict:
    path = Path(path)
    try:
        if path.suffix == ".toml":
            with open(path, "rb") as f:
                return tomllib.load(f)
        with open(path, encoding="utf-8") as f:
            return json.load(f)
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    except (OSError, ValueError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc


def resolve_config_path(path: str | Path | None = None) -> Path:
    if path is not None:
        return Path(path)
    env = os.environ.get(ENV_VAR)
    if env:
        return Path(env)
    return bundled_config_path()


@dataclass
class AppConfig:
    model: LearningModel
    recommenders: RecommenderConfig
    experiments: dict[str, ExperimentConfig]
    simulation: SimulationConfig
    log_path: Path | None = None
    strict: bool = False
    source: Path | None = field(default=None, repr=False)

    @property
    def default_experiment(self) -> ExperimentConfig:
        if not self.experiments:
            raise ConfigError("no experiment configured")
        return next(iter(self.experiments.values()))

    def experiment(self, experiment_id: str | None = None) -> ExperimentConfig:
        if experiment_id is None:
            return self.default_experiment
        try:
            return self.experiments[experiment_id]
        except KeyError:
            raise ConfigError(f"unknown experiment {experiment_id!r}") from None

    def simulation_experiment(self) -> ExperimentConfig:
        return self.experiment(self.simulation.experiment_id)


def load_config(path: str | Path | None = None) -> AppConfig:
    """Read and validate the whole application config."""
    source = resolve_config_path(path)
    raw = read_config_file(source)
    base = source.parent

    def rel(p):
        p = Path(p)
        return p if p.is_absolute() else base / p

    try:
        model_cfg = raw["model"]
        strict = bool(model_cfg.get("strict", False))
        model = load_model(
            rel(model_cfg["outcomes"]), rel(model_cfg["items"]), rel(model_cfg["alignments"]), strict=strict
        )
    except KeyError as exc:
        raise ConfigError(f"model section needs {exc}") from exc
    except OSError as exc:
        raise ConfigError(f"cannot read model file: {exc}") from exc
    experiments = {}
    for exp in raw.get("experiments", []):
        cfg = ExperimentConfig.from_dict(exp)
        experiments[cfg.experiment_id] = cfg
    log = raw.get("log")
    return AppConfig(
        model=model,
        recommenders=RecommenderConfig.from_dict(raw.get("recommenders", {})),
        experiments=experiments,
        simulation=SimulationConfig.from_dict(raw.get("simulation", {})),
        log_path=rel(log) if log else None,
        strict=strict,
        source=source,
    )

# maipp/cli/config.py

"""Loading experiment configs from YAML files."""

import logging
from pathlib import Path
from typing import Any, Dict, Optional

import yaml

from maipp.core.config import ExperimentConfig
from maipp.core.errors import MaippError
from maipp.planners.registry import parse_method

# Set up logging
logger = logging.getLogger(__name__)


class ConfigError(MaippError):
    """An experiment file could not be read or parsed."""


def _merge(base: Dict[str, Any], override: Dict[str, Any]) -> Dict[str, Any]:
    out = dict(base)
    for key, value in override.items():
        if isinstance(value, dict) and isinstance(out.get(key), dict):
            out[key] = _merge(out[key], value)
        else:
            out[key] = value
    return out


def load_config(
    path: Optional[Path] = None,
    seed: Optional[int] = None,
    out: Optional[Path] = None,
    checkpoint: Optional[Path] = None,
    overrides: Optional[Dict[str, Any]] = None,
) -> ExperimentConfig:
    """
    Reads an experiment file and applies command-line overrides.

    A missing ``path`` gives the defaults. Method labels are parsed up front
    so a typo fails before any episode runs.

    Raises:
        ConfigError: if the file cannot be read or is not a YAML mapping
        pydantic.ValidationError: if a value is out of range
        MethodSpecError: if a method label is malformed
    """
    data: Dict[str, Any] = {}
    if path is not None:
        try:
            loaded = yaml.safe_load(Path(path).read_text())
        except OSError as e:
            raise ConfigError(f"cannot read config {path}: {e}") from e
        except yaml.YAMLError as e:
            raise ConfigError(f"config {path} is not valid YAML: {e}") from e
        if loaded is None:
            loaded = {}
        if not isinstance(loaded, dict):
            raise ConfigError(f"config {path} must be a mapping at the top level")
        data = loaded
    if overrides:
        data = _merge(data, overrides)
    if seed is not None:
        data["seed"] = seed
    if out is not None:
        data = _merge(data, {"output": {"directory": str(out)}})
    if checkpoint is not None:
        data["checkpoint"] = str(checkpoint)
    cfg = ExperimentConfig(**data)
    for label in cfg.methods:
        parse_method(label)
    logger.debug(f"Loaded config from {path or 'defaults'}: {len(cfg.methods)} methods, seed {cfg.seed}")
    return cfg


def dump_config(cfg: ExperimentConfig, path: Path) -> None:
    """Writes the effective config next to its results."""
    path.parent.mkdir(parents=True, exist_ok=True)
    data = cfg.model_dump(mode="json")
    path.write_text(yaml.safe_dump(data, sort_keys=False))

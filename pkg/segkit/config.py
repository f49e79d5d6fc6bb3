import logging
import os
from pathlib import Path
from typing import Any, Dict, Optional, Union

import yaml
from pydantic import ValidationError

from segkit.errors import InputValidationError
from segkit.schemas.run import RunConfig

# Environment overrides; they win over the config file, command-line flags win over both
CACHE_DIR = os.getenv("SEGKIT_CACHE_DIR")
OUTPUT_DIR = os.getenv("SEGKIT_OUTPUT_DIR")
LOG_LEVEL = os.getenv("SEGKIT_LOG_LEVEL", "INFO")
DEVICE = os.getenv("SEGKIT_DEVICE", "cpu")

CONFIG_FILENAME = "config.yaml"
# train.rng_seed always mirrors the top-level seed
RUN_SEED_COPIES = {"train": {"rng_seed"}}


def configure_logging(level: Optional[str] = None) -> None:
    logging.basicConfig(
        level=(level or os.getenv("SEGKIT_LOG_LEVEL", LOG_LEVEL)).upper(),
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )


def read_yaml(path: Union[str, Path]) -> Dict[str, Any]:
    path = Path(path)
    try:
        with path.open("r", encoding="utf-8") as handle:
            data = yaml.safe_load(handle)
    except FileNotFoundError as exc:
        raise InputValidationError(f"config file {path} does not exist", path=str(path)) from exc
    except yaml.YAMLError as exc:
        raise InputValidationError(f"config file {path} is not valid YAML: {exc}", path=str(path)) from exc
    if data is None:
        return {}
    if not isinstance(data, dict):
        raise InputValidationError(f"config file {path} must hold a mapping", path=str(path))
    return data


def environment_overrides() -> Dict[str, Any]:
    paths: Dict[str, Any] = {}
    cache_dir = os.getenv("SEGKIT_CACHE_DIR", CACHE_DIR)
    output_dir = os.getenv("SEGKIT_OUTPUT_DIR", OUTPUT_DIR)
    if cache_dir:
        paths["cache_dir"] = cache_dir
    if output_dir:
        paths["output_dir"] = output_dir
    return {"paths": paths} if paths else {}


def merge(base: Dict[str, Any], update: Dict[str, Any]) -> Dict[str, Any]:
    """Recursive dict merge; values of ``update`` win."""
    merged = dict(base)
    for key, value in update.items():
        if isinstance(value, dict) and isinstance(merged.get(key), dict):
            merged[key] = merge(merged[key], value)
        else:
            merged[key] = value
    return merged


def load_run_config(path: Optional[Union[str, Path]] = None, **overrides: Any) -> RunConfig:
    """
    Resolve a run config: defaults < YAML file < SEGKIT_* environment < ``overrides``.

    Raises pydantic's ValidationError for schema violations.
    """
    data = read_yaml(path) if path is not None else {}
    data = merge(data, environment_overrides())
    data = merge(data, {key: value for key, value in overrides.items() if value is not None})
    return RunConfig.model_validate(data)


def dump_run_config(config: RunConfig) -> str:
    return yaml.safe_dump(config.model_dump(mode="json", exclude=RUN_SEED_COPIES), sort_keys=True, default_flow_style=False)


def write_resolved_config(config: RunConfig, directory: Union[str, Path]) -> Path:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    path = directory / CONFIG_FILENAME
    path.write_text(dump_run_config(config), encoding="utf-8")
    return path


def read_run_config(directory: Union[str, Path]) -> RunConfig:
    """Config a previous command wrote into ``directory``."""
    path = Path(directory) / CONFIG_FILENAME
    try:
        return RunConfig.model_validate(read_yaml(path))
    except ValidationError as exc:
        raise InputValidationError(f"{path} is not a valid run config: {exc.error_count()} errors", path=str(path)) from exc


def device() -> str:
    return os.getenv("SEGKIT_DEVICE", DEVICE)


def derive(config: RunConfig, **changes: Any) -> RunConfig:
    """Validated copy of ``config`` with nested ``changes`` merged in."""
    return RunConfig.model_validate(merge(config.model_dump(mode="json", exclude=RUN_SEED_COPIES), changes))

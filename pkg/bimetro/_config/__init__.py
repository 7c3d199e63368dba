"""
Module data directory, including:

* The packaged default configuration ``bimetro_config.yaml``.
"""

import os
from functools import lru_cache
from pathlib import Path
from typing import Optional

import yaml

__all__ = ["config", "reset", "default_seed"]

_MODULE_DATA = Path(__file__).parent
_USER_CONFIG_PATHS = (
    Path("config") / "bimetro_config.yaml",
    Path("bimetro_config.yaml"),
)
SEED_ENV_VAR = "BIMETRO_SEED"


def _read_yaml(path: Path) -> dict:
    with open(path, "r") as f:
        data = yaml.safe_load(f)
    return data or {}


def _merge(base: dict, override: dict) -> dict:
    merged = dict(base)
    for key, value in override.items():
        if isinstance(value, dict) and isinstance(merged.get(key), dict):
            merged[key] = _merge(merged[key], value)
        else:
            merged[key] = value
    return merged


@lru_cache(maxsize=None)
def _load() -> dict:
    conf = _read_yaml(_MODULE_DATA / "bimetro_config.yaml")
    for path in _USER_CONFIG_PATHS:
        if path.exists():
            conf = _merge(conf, _read_yaml(path))
            break
    return conf


def config(section: str = "bimetro", key: Optional[str] = None):
    """
    Access the merged configuration.

    Args:
        section: top-level section of the YAML file.
        key: optional key inside the section; the whole section is returned
            when omitted.
    """
    settings = _load().get(section, {})
    if key is None:
        return dict(settings)
    return settings.get(key)


def reset() -> None:
    """
    Drop the cached configuration so the next access re-reads the files.
    """
    _load.cache_clear()


def default_seed() -> int:
    """
    Seed for stochastic checks; ``BIMETRO_SEED`` wins over the config file.
    """
    env = os.environ.get(SEED_ENV_VAR)
    if env is not None and env.strip():
        return int(env)
    return int(config("bimetro", "seed"))

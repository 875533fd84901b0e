"""
app/core/settings.py - Runtime configuration

Numerical tolerances, the dense dimension cap and the seed used for generic
elements are read from QCA_* environment variables (a .env file is honoured).
Values are validated once and cached; tests change the environment and call
reload_settings().
"""

from __future__ import annotations

import logging
import os
import threading
from contextlib import contextmanager
from typing import Iterator, Optional

from dotenv import find_dotenv, load_dotenv
from pydantic import BaseModel, ConfigDict, Field, field_validator

load_dotenv(find_dotenv(usecwd=True))


_LOG_FORMAT = "%(asctime)s %(levelname)s %(name)s: %(message)s"


class Settings(BaseModel):
    model_config = ConfigDict(frozen=True)

    tolerance: float = Field(1e-9, gt=0)
    spectral_gap: float = Field(1e-6, gt=0)
    rank_tolerance: float = Field(1e-9, gt=0)
    dimension_cap: int = Field(4096, ge=1)
    seed: int = Field(0, ge=0)
    cache_size: int = Field(16, ge=0)
    log_level: str = "WARNING"

    @field_validator("log_level")
    @classmethod
    def validate_log_level(cls, v: str) -> str:
        level = v.upper()
        if level not in ("DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"):
            raise ValueError(f"unknown log level '{v}'")
        return level


_ENV_FIELDS = {
    "tolerance": "QCA_TOLERANCE",
    "spectral_gap": "QCA_SPECTRAL_GAP",
    "rank_tolerance": "QCA_RANK_TOLERANCE",
    "dimension_cap": "QCA_DIMENSION_CAP",
    "seed": "QCA_SEED",
    "cache_size": "QCA_CACHE_SIZE",
    "log_level": "QCA_LOG_LEVEL",
}

_SETTINGS: Optional[Settings] = None
_LOCK = threading.Lock()


def _read_env() -> Settings:
    values = {}
    for field_name, env_name in _ENV_FIELDS.items():
        raw = os.getenv(env_name)
        if raw is not None and raw.strip():
            values[field_name] = raw.strip()
    return Settings(**values)


def get_settings() -> Settings:
    """Return the cached settings, reading the environment on first use."""
    global _SETTINGS
    with _LOCK:
        if _SETTINGS is None:
            _SETTINGS = _read_env()
        return _SETTINGS


def reload_settings() -> Settings:
    """Drop the cache and re-read the environment, including a .env in the working directory."""
    global _SETTINGS
    load_dotenv(find_dotenv(usecwd=True))
    with _LOCK:
        _SETTINGS = _read_env()
        return _SETTINGS


@contextmanager
def settings_override(**values) -> Iterator[Settings]:
    """Temporarily replace selected fields, e.g. a per-invocation seed or dimension cap."""
    global _SETTINGS
    previous = get_settings()
    changes = {k: v for k, v in values.items() if v is not None}
    updated = Settings(**{**previous.model_dump(), **changes})
    with _LOCK:
        _SETTINGS = updated
    try:
        yield updated
    finally:
        with _LOCK:
            _SETTINGS = previous


def configure_logging(level: Optional[str] = None) -> None:
    """Install the root handler used by the command-line front end."""
    chosen = (level or get_settings().log_level).upper()
    logging.basicConfig(level=getattr(logging, chosen, logging.WARNING), format=_LOG_FORMAT)


def env_template(settings: Optional[Settings] = None) -> str:
    """.env text listing every QCA_* variable with its current or default value."""
    current = (settings or Settings()).model_dump()
    lines = ["# QCA toolkit configuration", ""]
    for field_name, env_name in _ENV_FIELDS.items():
        lines.append(f"{env_name}={current[field_name]}")
    return "\n".join(lines) + "\n"

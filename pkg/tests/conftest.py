"""Pytest configuration and fixtures for the QCA toolkit tests."""

import json
import os
from pathlib import Path

import numpy as np
import pytest
from hypothesis import HealthCheck
from hypothesis import settings as hypothesis_settings

os.environ.setdefault("QCA_TOLERANCE", "1e-9")
os.environ.setdefault("QCA_SEED", "0")
os.environ.setdefault("QCA_LOG_LEVEL", "WARNING")

from app.core.rules import clear_unitary_cache  # noqa: E402
from app.core.settings import reload_settings  # noqa: E402

hypothesis_settings.register_profile(
    "qca",
    deadline=None,
    max_examples=25,
    derandomize=True,
    database=None,
    suppress_health_check=[HealthCheck.function_scoped_fixture, HealthCheck.too_slow],
)
hypothesis_settings.load_profile("qca")


@pytest.fixture(autouse=True)
def fresh_settings():
    """Re-read QCA_* settings and drop cached unitaries around every test."""
    reload_settings()
    clear_unitary_cache()
    yield
    reload_settings()
    clear_unitary_cache()


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20240611)


@pytest.fixture
def write_json(tmp_path: Path):
    """Write a JSON document under tmp_path and return its path."""

    def _write(name: str, payload) -> Path:
        path = tmp_path / name
        path.write_text(json.dumps(payload), encoding="utf-8")
        return path

    return _write

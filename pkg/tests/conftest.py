from __future__ import annotations

from pathlib import Path

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from hzreach import pipeline
from hzreach.config import load_run_config

settings.register_profile("repo", derandomize=True, deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("repo")

ROOT = Path(__file__).resolve().parent.parent
PENDULUM = ROOT / "configs" / "pendulum" / "run.json"

ACCEPTANCE_LINES: list[str] = []


@pytest.fixture(scope="session")
def pendulum_cfg():
    return load_run_config(PENDULUM)


@pytest.fixture(scope="session")
def pendulum_built(pendulum_cfg):
    return pipeline.build_sets(pendulum_cfg)


@pytest.fixture(scope="session")
def pendulum_records(pendulum_cfg, pendulum_built):
    return pipeline.run_reach(pendulum_cfg, pendulum_built, check=False)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)

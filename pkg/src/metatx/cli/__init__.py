"""Scenario runner and analysis front-end."""

from .config import (
    ConfigParseError,
    Scenario,
    ScenarioInvariantViolation,
    bundled_scenarios,
    load_bundled,
    load_scenario,
    parse_scenario,
)
from .main import main
from .output import render, write_run
from .runner import RunResult, Simulation, run_simulation

__all__ = [
    "ConfigParseError",
    "RunResult",
    "Scenario",
    "ScenarioInvariantViolation",
    "Simulation",
    "bundled_scenarios",
    "load_bundled",
    "load_scenario",
    "main",
    "parse_scenario",
    "render",
    "run_simulation",
    "write_run",
]

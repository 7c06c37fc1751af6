"""Scenario replay, canonical workflows and cost reporting."""

from importlib import resources
from pathlib import Path

from .costs import (
    WORKFLOWS,
    CostPoint,
    CostReport,
    PriceError,
    PricePoint,
    cost_report,
    ingest_prices,
    parse_prices,
    per_op_gas,
    usd_cost,
)
from .scenario import (
    AssertionResult,
    Outcome,
    Scenario,
    ScenarioError,
    ScenarioResult,
    Step,
    derive_key,
    run_scenario,
)
from .svg import render_svg

BUNDLED_SCENARIOS = ("canonical_gas", "full_workflow", "negative_paths")


def data_path(name: str) -> Path:
    """Path of a file shipped in ``medledger/harness/data``."""
    return Path(str(resources.files(__package__).joinpath("data", name)))


def bundled_scenario(name: str) -> Scenario:
    return Scenario.load(data_path(f"{name}.json"))


__all__ = [
    "WORKFLOWS", "CostPoint", "CostReport", "PriceError", "PricePoint", "cost_report",
    "ingest_prices", "parse_prices", "per_op_gas", "usd_cost", "AssertionResult", "Outcome",
    "Scenario", "ScenarioError", "ScenarioResult", "Step", "derive_key", "run_scenario",
    "render_svg", "BUNDLED_SCENARIOS", "data_path", "bundled_scenario",
]

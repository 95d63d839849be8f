"""Deterministic simulator of ZSM-based management for 3GPP network slicing."""
from importlib import resources

from .engine import LoadProfile, run_until, tick
from .scenario import ScenarioConfig, load_scenario, parse_scenario
from .verify import metrics_from_trace, verify_trace
from .world import World, scaling_complete

__version__ = "0.1.0"

BUNDLED_SCENARIOS = ("option_1a", "option_1b", "option_2", "isolation")


def bundled_scenario(name: str) -> str:
    """Text of a scenario shipped with the package."""
    return resources.files(__package__).joinpath("scenarios", f"{name}.scn").read_text(encoding="utf-8")


__all__ = [
    "BUNDLED_SCENARIOS", "LoadProfile", "ScenarioConfig", "World", "bundled_scenario", "load_scenario",
    "metrics_from_trace", "parse_scenario", "run_until", "scaling_complete", "tick", "verify_trace",
]

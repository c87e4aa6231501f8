"""Fixed-action comparison games and the undefended cluster.

One-shot scenarios pin the CH action toward every CM for the whole run and
pin the attackers' action; benevolent CMs keep forwarding. Hardware faults
still act, since a fault is physical rather than a strategy.
"""

from __future__ import annotations

from .config import SimConfig
from .engine import ONE_SHOT_ACTIONS, Scenario, SimResult, simulate
from .errors import UsageError

ScenarioId = Scenario

ONE_SHOT_SCENARIOS = tuple(ONE_SHOT_ACTIONS)


def run_one_shot(scenario: Scenario, config: SimConfig) -> SimResult:
    try:
        scenario = Scenario(scenario)
    except ValueError:
        raise UsageError(f"unknown scenario {scenario!r}") from None
    if scenario not in ONE_SHOT_ACTIONS:
        raise UsageError(f"{scenario.value} is not a one-shot scenario; "
                         f"expected one of {[s.value for s in ONE_SHOT_SCENARIOS]}")
    return simulate(config, scenario)


def run_no_defense(config: SimConfig) -> SimResult:
    """Cluster without any detection: beacons always granted, attackers never stop."""
    return simulate(config, Scenario.NO_DEFENSE)


def run_scenario(scenario: Scenario, config: SimConfig) -> SimResult:
    return simulate(config, Scenario(scenario))

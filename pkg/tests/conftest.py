from __future__ import annotations

import pytest

from pairviz import fixtures


@pytest.fixture(scope="session")
def airports_path() -> str:
    return fixtures.path("airports.json")


@pytest.fixture(scope="session")
def flights_scenario_path() -> str:
    return fixtures.path("flights.json")


@pytest.fixture(scope="session")
def tutor_scenario_path() -> str:
    return fixtures.path("tutor_graph.json")


@pytest.fixture(scope="session")
def golden_trace_a() -> str:
    return fixtures.path("traces", "golden_a.jsonl")


@pytest.fixture(scope="session")
def golden_trace_b() -> str:
    return fixtures.path("traces", "golden_b.jsonl")


@pytest.fixture(scope="session")
def tap_trace_path() -> str:
    return fixtures.path("traces", "tap_right.jsonl")

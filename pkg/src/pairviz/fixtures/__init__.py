"""Shipped fixtures: airport table, scenario files, golden traces and logs."""
from __future__ import annotations

from importlib import resources


def path(*relative: str) -> str:
    """Filesystem path of a shipped fixture, e.g. path("traces", "tap.jsonl")."""
    base = resources.files(__package__)
    target = base
    for part in relative:
        target = target / part
    return str(target)

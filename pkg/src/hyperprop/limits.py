"""Enumeration guards and constants left open by the bounds.

Every exhaustive routine takes an explicit ``guard`` argument; when it is
omitted the module-level defaults below apply.  The CLI config file can
override them (section ``[limits]``).
"""
from __future__ import annotations

from dataclasses import dataclass, replace


@dataclass(frozen=True)
class Limits:
    enumeration_guard: int = 2**24
    search_nodes: int = 2**24
    probe_blocks: int = 4
    ascent_restarts: int = 8
    # constants left unspecified by the underlying bounds; labelled as such in reports
    c_cut: float = 1.0
    c_tv: float = 1.0
    c_main: float = 1.0
    c_linear: float = 1.0


DEFAULT = Limits()
_current = DEFAULT


def current() -> Limits:
    return _current


def configure(**overrides) -> Limits:
    """Replace the process-wide defaults; returns the new value."""
    global _current
    _current = replace(_current, **overrides)
    return _current


def reset():
    global _current
    _current = DEFAULT


def guard(value=None) -> int:
    return _current.enumeration_guard if value is None else int(value)

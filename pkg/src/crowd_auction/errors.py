"""Exception types shared across the simulator."""

from __future__ import annotations


class ConfigError(ValueError):
    """A scenario or experiment parameter is out of its legal range."""


class StateError(RuntimeError):
    """An operation was applied to an engine in an illegal state."""


class UndefinedMetricError(ArithmeticError):
    """A metric's defining expression has no value for the given inputs."""

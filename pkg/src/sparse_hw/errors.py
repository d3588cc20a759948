"""Shared exception types."""

from __future__ import annotations


class ConfigError(ValueError):
    """Invalid configuration or usage (CLI exit code 2)."""


class BudgetExceededError(RuntimeError):
    """A compute budget guard tripped (CLI exit code 3)."""

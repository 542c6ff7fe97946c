"""Preference-driven desk scheduling with optimal explanations."""

__version__ = "0.1.0"

"""Nested dual-agent reinforcement learning for irrigation and nitrogen scheduling."""

__version__ = "0.1.0"

"""Simulation of an adversarial RIS that inserts a deceiving channel into
reciprocity-based secret key generation, with relay and pilot-spoofing
baselines, a key-match-rate quadrature oracle and a Monte Carlo harness.
"""
from __future__ import annotations

__version__ = "0.1.0"

from .config import ConfigError, ScenarioConfig, paper_scenario  # noqa: E402
from .theory import KmrQuery, kmr_limit, theoretical_kmr  # noqa: E402

__all__ = [
    "__version__",
    "ConfigError",
    "ScenarioConfig",
    "paper_scenario",
    "KmrQuery",
    "kmr_limit",
    "theoretical_kmr",
]

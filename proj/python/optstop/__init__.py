"""Optimal multiple stopping for intrusion prevention."""

from ._optstop import (
    ConfigError,
    Experiment,
    SchemaError,
    ZeroLikelihoodError,
    belief_update,
    harden,
    sigmoid,
    stop_probability,
    transition_minors,
)

__all__ = [
    "ConfigError",
    "Experiment",
    "SchemaError",
    "ZeroLikelihoodError",
    "belief_update",
    "harden",
    "sigmoid",
    "stop_probability",
    "transition_minors",
]

"""Contingent convertible pricing under partial information."""

from ._core import (
    ConfigError,
    ConversionTriggered,
    DomainError,
    Filter,
    Measure,
    ModelParams,
    Posterior,
    PosteriorCollapse,
    barrier_level,
    base_case_parameters,
    bridge_no_hit,
    conditional_survival,
    drifts,
    first_passage_cdf,
    first_passage_oracle,
    price,
    price_oracle,
    run_command,
    simulate_stock_scenarios,
    survival_closed_form,
    survival_oracle,
)

__all__ = [
    "ConfigError",
    "ConversionTriggered",
    "DomainError",
    "Filter",
    "Measure",
    "ModelParams",
    "Posterior",
    "PosteriorCollapse",
    "barrier_level",
    "base_case_parameters",
    "bridge_no_hit",
    "conditional_survival",
    "drifts",
    "first_passage_cdf",
    "first_passage_oracle",
    "price",
    "price_oracle",
    "run_command",
    "simulate_stock_scenarios",
    "survival_closed_form",
    "survival_oracle",
]

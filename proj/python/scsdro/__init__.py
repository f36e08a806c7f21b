"""Python bindings for the scsdro library."""

from ._core import (
    ArgumentError,
    ConfigError,
    ConvergenceError,
    DataError,
    NumericError,
    auto_params,
    cli,
    dual_value_oracle,
    loss_values,
    mean_semideviation,
    moreau_gradient,
    objective,
    pgm_attack,
    run_scs,
    run_spider,
    semidev_attack,
    synthetic,
)

__all__ = [
    "ArgumentError",
    "ConfigError",
    "ConvergenceError",
    "DataError",
    "NumericError",
    "auto_params",
    "cli",
    "dual_value_oracle",
    "loss_values",
    "mean_semideviation",
    "moreau_gradient",
    "objective",
    "pgm_attack",
    "run_scs",
    "run_spider",
    "semidev_attack",
    "synthetic",
]

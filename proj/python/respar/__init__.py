"""Layer-parallel training of residual networks."""

from ._respar import (
    ExperimentSummary,
    MetricsRow,
    TrainConfig,
    gen_circles,
    gradcheck,
    load_config,
    psi,
    train,
)

__all__ = [
    "ExperimentSummary",
    "MetricsRow",
    "TrainConfig",
    "gen_circles",
    "gradcheck",
    "load_config",
    "psi",
    "train",
]

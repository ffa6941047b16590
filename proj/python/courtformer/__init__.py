"""Entity transformer for multi-agent trajectory modeling."""

from ._core import (
    Checkpoint,
    DataError,
    NumericError,
    UsageError,
    ball_bin,
    ball_bin_center,
    causal_mask,
    model_config,
    parameter_count,
    player_bin,
    player_bin_center,
    run,
)

__all__ = [
    "Checkpoint",
    "DataError",
    "NumericError",
    "UsageError",
    "ball_bin",
    "ball_bin_center",
    "causal_mask",
    "model_config",
    "parameter_count",
    "player_bin",
    "player_bin_center",
    "run",
]

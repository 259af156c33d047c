"""Gradient descent for linear regression under input-noise data augmentation.

Naive, ridge and augmented (on-line / off-line noisy copies) training under
full-batch SSE, full-batch MSE and mini-batch MSE criteria, together with
Monte-Carlo oracles that check the ridge equivalence of the augmented updates.
"""

__version__ = "0.1.0"

from .errors import (
    ConfigError,
    DivergenceError,
    IngestionError,
    ParameterError,
    ShapeError,
)
from .numkit import GaussSource, gauss_mat, matvec, matvec_t, sq_norm
from .data import (
    AugmentationSpec,
    BatchPartition,
    Dataset,
    NoiseBank,
    SyntheticSpec,
    gen_synthetic,
    load_csv,
    make_noise_bank,
    partition,
    slice_rows,
    standardize,
)
from .trainers import TrainerConfig, WeightTrajectory, train

__all__ = [
    "AugmentationSpec",
    "BatchPartition",
    "ConfigError",
    "Dataset",
    "DivergenceError",
    "GaussSource",
    "IngestionError",
    "NoiseBank",
    "ParameterError",
    "ShapeError",
    "SyntheticSpec",
    "TrainerConfig",
    "WeightTrajectory",
    "gauss_mat",
    "gen_synthetic",
    "load_csv",
    "make_noise_bank",
    "matvec",
    "matvec_t",
    "partition",
    "slice_rows",
    "sq_norm",
    "standardize",
    "train",
]

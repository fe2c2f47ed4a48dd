"""Pool-based active learning with entropy-filtered mean-distance sampling."""

from .core import DatasetState, Example, Image, IterationRecord, RunConfig, transfer
from .learner import AdamConfig
from .metrics import binarize, distance, entropy, mean_distance_score
from .sampler import (entropy_filter, farthest_first_init, medal_select, random_select,
                      uncertainty_select)

__version__ = "0.1.0"

__all__ = [
    "AdamConfig", "DatasetState", "Example", "Image", "IterationRecord", "RunConfig",
    "binarize", "distance", "entropy", "entropy_filter", "farthest_first_init",
    "mean_distance_score", "medal_select", "random_select", "transfer", "uncertainty_select",
]

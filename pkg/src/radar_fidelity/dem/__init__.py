"""Learned fidelity metric: a point-set classifier over radar clouds.

The metric is the classifier's softmax confidence for the "real" class,
evaluated per frame on simulated clouds.
"""

from .data import DatasetSpec, augment, build_dataset, resample
from .network import ClassifierModel, forward, init_model, load_model, save_model
from .sampling import ball_query, farthest_point_sampling
from .training import TrainConfig, accuracy, dem_score, mean_loss, train

__all__ = [
    "DatasetSpec",
    "TrainConfig",
    "ClassifierModel",
    "augment",
    "build_dataset",
    "resample",
    "farthest_point_sampling",
    "ball_query",
    "init_model",
    "forward",
    "save_model",
    "load_model",
    "train",
    "accuracy",
    "dem_score",
    "mean_loss",
]

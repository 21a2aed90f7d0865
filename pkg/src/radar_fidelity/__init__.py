"""Synthetic automotive-radar point clouds and fidelity metrics."""

__version__ = "0.1.0"

from .core import (
    Detection,
    PointCloud,
    Pose2D,
    Scenario,
    Source,
    euclidean,
    figure_eight_scenario,
)

__all__ = [
    "Detection",
    "PointCloud",
    "Pose2D",
    "Scenario",
    "Source",
    "euclidean",
    "figure_eight_scenario",
    "__version__",
]

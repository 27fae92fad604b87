"""Sparse optical-flow trajectory pipeline.

Dense flow estimation, magnitude-weighted keypoint sampling, trajectory
propagation by flow integration, and Gaussian-smoothed sparse
conditioning maps, plus synthetic ground-truth scenes and metrics.
"""

from .backend import BACKEND
from .errors import FlowTrajError, FormatError, InvalidInputError
from .flow import (
    FlowField,
    FlowParams,
    Frame,
    estimate_flow,
    magnitude_at,
    read_flo,
    sample_bilinear,
    write_flo,
)

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "FlowTrajError",
    "FormatError",
    "InvalidInputError",
    "Frame",
    "FlowField",
    "FlowParams",
    "estimate_flow",
    "sample_bilinear",
    "magnitude_at",
    "read_flo",
    "write_flo",
    "__version__",
]

"""Rank candidate areas for new retail stores from venue and check-in data."""

from ._kernels import BACKEND as KERNEL_BACKEND
from .model import (
    FEATURE_NAMES,
    CandidateArea,
    CheckIn,
    Dataset,
    FeatureVector,
    Transition,
    Venue,
    chain_areas,
    validate_dataset,
)

__version__ = "0.1.0"

__all__ = [
    "FEATURE_NAMES",
    "KERNEL_BACKEND",
    "CandidateArea",
    "CheckIn",
    "Dataset",
    "FeatureVector",
    "Transition",
    "Venue",
    "chain_areas",
    "validate_dataset",
]

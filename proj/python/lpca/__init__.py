"""Penalized logistic PCA for binary data."""

from ._core import (
    Model,
    __version__,
    evaluate,
    fit,
    full_information_theta,
    neg_log_likelihood,
    select,
    simulate,
    threshold_curve,
    weighted_sv_threshold,
)

__all__ = [
    "Model",
    "__version__",
    "evaluate",
    "fit",
    "full_information_theta",
    "neg_log_likelihood",
    "select",
    "simulate",
    "threshold_curve",
    "weighted_sv_threshold",
]

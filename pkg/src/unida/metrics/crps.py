"""Continuous ranked probability score of an ensemble."""

__all__ = ["crps", "crps_pointwise"]

import numpy as np

from unida.common.errors import ShapeError
from unida.metrics.errors import LatWeights


def crps_pointwise(ensemble, truth) -> np.ndarray:
    """Sample-form CRPS per point for an ensemble `[M, ...]` and truth `[...]`.

    (1/M) sum_i |x_i - y| - (1/2M^2) sum_ij |x_i - x_j|, with the pair sum evaluated on the
    sorted members as (2/M^2) sum_i (2i - M - 1) x_(i). A single member gives |x - y|.

    Example:
        >>> float(crps_pointwise([[0.0], [1.0]], [0.0])[0])
        0.25
    """
    ens = np.asarray(ensemble, dtype=np.float64)
    truth = np.asarray(truth, dtype=np.float64)
    if ens.ndim < 1 or ens.shape[1:] != truth.shape:
        raise ShapeError(f"Ensemble {ens.shape} does not match truth {truth.shape}")
    M = ens.shape[0]
    skill = np.abs(ens - truth).mean(axis=0)
    ranks = (2 * np.arange(1, M + 1) - M - 1).reshape((M,) + (1,) * truth.ndim)
    spread = np.sum(ranks * np.sort(ens, axis=0), axis=0) / M**2
    return skill - spread


def crps(ensemble, truth, weights: LatWeights | None = None) -> float:
    """Mean CRPS over points, latitude weighted along the second-to-last axis when given."""
    scores = crps_pointwise(ensemble, truth)
    if weights is None:
        return float(scores.mean())
    w = weights.grid(scores.shape)
    return float(np.sum(w * scores) / np.sum(w))

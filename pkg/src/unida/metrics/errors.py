"""Pointwise error metrics: NRMSE, bias and anomaly correlation, optionally latitude weighted.

Inputs are trajectories or arrays shaped `[K, C, H, W]`; latitude weights act on the H axis.
"""

__all__ = ["LatWeights", "NrmseResult", "lat_weights", "nrmse", "bias", "acc"]

import logging
from dataclasses import dataclass

import numpy as np

from unida.common.errors import ShapeError, ValidationError
from unida.core.trajectory import Trajectory

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class LatWeights:
    """Per-row weights proportional to cos(latitude), normalized to unit mean."""

    weights: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=np.float64).ravel()
        if w.size == 0 or np.any(w <= 0) or not np.all(np.isfinite(w)):
            raise ValidationError("Latitude weights must be finite and positive")
        w = w / w.mean()
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)

    @classmethod
    def from_latitudes(cls, latitudes_deg) -> "LatWeights":
        return cls(np.cos(np.deg2rad(np.asarray(latitudes_deg, dtype=np.float64))))

    def grid(self, shape: tuple[int, ...]) -> np.ndarray:
        """Weights broadcast to an array whose second-to-last axis is latitude."""
        if shape[-2] != self.weights.shape[0]:
            raise ShapeError(f"{self.weights.shape[0]} latitude weights for {shape[-2]} rows")
        return np.broadcast_to(self.weights[:, np.newaxis], shape)


def lat_weights(n_lat: int) -> LatWeights:
    """Weights for an equiangular grid with cell-centered latitudes from south to north."""
    if n_lat < 1:
        raise ValidationError(f"n_lat must be >= 1, got {n_lat}")
    centers = -90.0 + (np.arange(n_lat) + 0.5) * 180.0 / n_lat
    return LatWeights.from_latitudes(centers)


@dataclass(frozen=True)
class NrmseResult:
    """Per-frame values and their mean over frames where the metric is defined."""

    per_frame: np.ndarray
    mean: float
    undefined_frames: tuple[int, ...] = ()


def _pair(pred, truth) -> tuple[np.ndarray, np.ndarray]:
    pred = pred.frames if isinstance(pred, Trajectory) else np.asarray(pred, dtype=np.float64)
    truth = truth.frames if isinstance(truth, Trajectory) else np.asarray(truth, dtype=np.float64)
    if pred.shape != truth.shape:
        raise ShapeError(f"Prediction shape {pred.shape} differs from truth {truth.shape}")
    if pred.ndim < 2:
        raise ShapeError(f"Expected frames with at least two axes, got {pred.shape}")
    return pred, truth


def _weight_grid(shape, weights: LatWeights | None) -> np.ndarray:
    return np.ones(shape) if weights is None else weights.grid(shape)


def nrmse(
    pred, truth, weights: LatWeights | None = None, relative: bool | None = None
) -> NrmseResult:
    """Per-frame root-mean-square error.

    The relative variant (default without weights) is ||pred - truth|| / ||truth|| per frame. With
    latitude weights the default is sqrt(mean(w * (pred - truth)^2)) per frame.

    Frames whose truth is identically zero are undefined in relative mode: they are reported as
    NaN and excluded from the mean.
    """
    pred, truth = _pair(pred, truth)
    relative = weights is None if relative is None else relative
    w = _weight_grid(pred.shape, weights)
    axes = tuple(range(1, pred.ndim))
    err = np.sqrt(np.mean(w * (pred - truth) ** 2, axis=axes))
    undefined: tuple[int, ...] = ()
    if relative:
        norm = np.sqrt(np.mean(w * truth**2, axis=axes))
        undefined = tuple(int(k) for k in np.flatnonzero(norm == 0))
        if undefined:
            logger.warning(f"Relative NRMSE undefined for all-zero truth frames {undefined}")
        err = np.divide(err, norm, out=np.full_like(err, np.nan), where=norm > 0)
    defined = err[np.isfinite(err)]
    mean = float(defined.mean()) if defined.size else float("nan")
    return NrmseResult(per_frame=err, mean=mean, undefined_frames=undefined)


def bias(pred, truth, weights: LatWeights | None = None) -> float:
    """Weighted mean signed error over all frames and points."""
    pred, truth = _pair(pred, truth)
    w = _weight_grid(pred.shape, weights)
    return float(np.sum(w * (pred - truth)) / np.sum(w))


def acc(pred, truth, climatology, weights: LatWeights | None = None) -> float:
    """Weighted anomaly correlation over all frames and points.

    Returns NaN (with a warning) when either anomaly field is identically zero.
    """
    pred, truth = _pair(pred, truth)
    clim = np.broadcast_to(np.asarray(climatology, dtype=np.float64), pred.shape)
    w = _weight_grid(pred.shape, weights)
    a, r = pred - clim, truth - clim
    denom = np.sqrt(np.sum(w * a**2) * np.sum(w * r**2))
    if denom == 0:
        logger.warning("ACC undefined: zero anomaly norm")
        return float("nan")
    return float(np.sum(w * a * r) / denom)

"""Critical success index at intensity thresholds (values on the 0-255 scale)."""

__all__ = ["SEVIR_THRESHOLDS", "CsiResult", "csi"]

from dataclasses import dataclass

import numpy as np

from unida.common.errors import ShapeError

SEVIR_THRESHOLDS = (16, 74, 133, 160, 181, 219)


@dataclass(frozen=True)
class CsiResult:
    per_threshold: dict[float, float]
    mean: float


def csi(pred, truth, thresholds=SEVIR_THRESHOLDS) -> CsiResult:
    """hits / (hits + misses + false alarms) with exceedance defined as value >= threshold.

    A threshold with no exceedances in either field scores 1.
    """
    pred = np.asarray(pred, dtype=np.float64)
    truth = np.asarray(truth, dtype=np.float64)
    if pred.shape != truth.shape:
        raise ShapeError(f"Prediction shape {pred.shape} differs from truth {truth.shape}")
    scores: dict[float, float] = {}
    for tau in thresholds:
        p, t = pred >= tau, truth >= tau
        hits = int(np.sum(p & t))
        misses = int(np.sum(~p & t))
        false_alarms = int(np.sum(p & ~t))
        total = hits + misses + false_alarms
        scores[tau] = 1.0 if total == 0 else hits / total
    return CsiResult(per_threshold=scores, mean=float(np.mean(list(scores.values()))))

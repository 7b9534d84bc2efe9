"""Tidy metric tables written as CSV plus a JSON summary of means."""

__all__ = ["MetricReport", "REPORT_COLUMNS"]

import json
import logging
from pathlib import Path

import numpy as np
import pandas as pd

from unida.metrics.crps import crps
from unida.metrics.csi import csi
from unida.metrics.errors import LatWeights, acc, bias, nrmse
from unida.metrics.spectrum import SpectrumBands, spectrum_error

logger = logging.getLogger(__name__)

REPORT_COLUMNS = ["trajectory_id", "frame", "metric", "band_or_threshold", "value"]


class MetricReport:
    """Accumulates long-format metric rows.

    Rows with `frame = -1` are trajectory-level aggregates.
    """

    def __init__(self):
        self._rows: list[tuple] = []

    def add(
        self,
        trajectory_id: str,
        frame: int,
        metric: str,
        value: float,
        band_or_threshold: str | float = "",
    ):
        self._rows.append((trajectory_id, int(frame), metric, str(band_or_threshold), value))

    def __len__(self) -> int:
        return len(self._rows)

    def score(
        self,
        trajectory_id: str,
        pred: np.ndarray,
        truth: np.ndarray,
        weights: LatWeights | None = None,
        climatology: np.ndarray | None = None,
        thresholds=None,
        spectra: bool = False,
        bands: SpectrumBands | None = None,
    ):
        """Add NRMSE per frame and the optional metric families for one trajectory.

        Args:
            pred, truth: `[K, C, H, W]` frames.
            weights: latitude weights (NRMSE, bias, ACC).
            climatology: enables ACC and bias when given.
            thresholds: enables CSI at these thresholds.
            spectra: add banded spectrum error per frame.
        """
        errors = nrmse(pred, truth, weights)
        for k, value in enumerate(errors.per_frame):
            self.add(trajectory_id, k, "nrmse", float(value))
        self.add(trajectory_id, -1, "nrmse", errors.mean)
        if climatology is not None:
            self.add(trajectory_id, -1, "acc", acc(pred, truth, climatology, weights))
            self.add(trajectory_id, -1, "bias", bias(pred, truth, weights))
        if thresholds is not None:
            for k in range(len(truth)):
                for tau, value in csi(pred[k], truth[k], thresholds).per_threshold.items():
                    self.add(trajectory_id, k, "csi", value, tau)
        if spectra:
            for k in range(len(truth)):
                for band, value in spectrum_error(pred[k], truth[k], bands).items():
                    self.add(trajectory_id, k, "spectrum_error", value, band)

    def score_ensemble(self, trajectory_id: str, ensemble: np.ndarray, truth: np.ndarray):
        """Add per-frame CRPS of an ensemble `[M, K, ...]`."""
        for k in range(truth.shape[0]):
            self.add(trajectory_id, k, "crps", crps(ensemble[:, k], truth[k]))

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(self._rows, columns=REPORT_COLUMNS)

    def summary(self) -> dict[str, float]:
        """Means over per-frame rows keyed by `metric` or `metric/band_or_threshold`."""
        df = self.to_frame()
        df = df[df["frame"] >= 0]
        out = {}
        for (metric, band), group in df.groupby(["metric", "band_or_threshold"], sort=True):
            key = f"{metric}/{band}" if band else metric
            out[key] = float(group["value"].mean())
        aggregates = self.to_frame()
        for metric in ("acc", "bias"):
            values = aggregates.loc[aggregates["metric"] == metric, "value"]
            if len(values):
                out[metric] = float(values.mean())
        return out

    def write(self, directory: str | Path) -> tuple[Path, Path]:
        """Write `metrics.csv` and `summary.json` into `directory`."""
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        csv_path = directory / "metrics.csv"
        summary_path = directory / "summary.json"
        self.to_frame().to_csv(csv_path, index=False, float_format="%.10g")
        summary_path.write_text(json.dumps(self.summary(), indent=2, sort_keys=True) + "\n")
        logger.info(f"Wrote {len(self)} metric rows to {csv_path}")
        return csv_path, summary_path

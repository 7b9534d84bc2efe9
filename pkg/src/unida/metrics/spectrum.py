"""Radially averaged energy spectra and banded relative spectrum error."""

__all__ = ["SpectrumBands", "radial_spectrum", "spectrum_error"]

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from unida.common.errors import ShapeError

Band = tuple[float, float]


class SpectrumBands(BaseModel):
    """Half-open wavenumber bands [lo, hi) and the energy floor of the relative error."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    low: Band = (0.5, 8.0)
    mid: Band = (8.0, 32.0)
    high: Band = (32.0, 64.0)
    all: Band = (0.5, 64.0)
    eps: float = Field(default=1e-12, gt=0)

    @model_validator(mode="after")
    def check_bands(self):
        for name in ("low", "mid", "high", "all"):
            lo, hi = getattr(self, name)
            if not 0 <= lo < hi:
                raise ValueError(f"Band {name} must satisfy 0 <= lo < hi, got {(lo, hi)}")
        return self

    def items(self) -> list[tuple[str, Band]]:
        return [(name, getattr(self, name)) for name in ("low", "mid", "high", "all")]


def _as_field(frame) -> np.ndarray:
    field = np.asarray(frame, dtype=np.float64)
    if field.ndim == 3:
        field = field.reshape(-1, *field.shape[-2:])
    elif field.ndim == 2:
        field = field[np.newaxis]
    else:
        raise ShapeError(f"Expected a [H, W] or [C, H, W] frame, got {field.shape}")
    if field.shape[-1] != field.shape[-2]:
        raise ShapeError(f"Spectra need square frames, got {field.shape[-2:]}")
    return field


def radial_spectrum(frame) -> tuple[np.ndarray, np.ndarray]:
    """E(k): mean of |FFT|^2 over annuli of integer-rounded wavenumber magnitude.

    Channels of a `[C, H, W]` frame contribute summed energy.

    Returns:
        Tuple of integer wavenumbers present on the grid and their mean energy.
    """
    field = _as_field(frame)
    N = field.shape[-1]
    power = np.sum(np.abs(np.fft.fft2(field) / N**2) ** 2, axis=0)
    k = np.fft.fftfreq(N, d=1.0 / N)
    radius = np.rint(np.hypot(k[:, np.newaxis], k[np.newaxis, :])).astype(np.int64).ravel()
    counts = np.bincount(radius)
    totals = np.bincount(radius, weights=power.ravel())
    present = np.flatnonzero(counts)
    return present, totals[present] / counts[present]


def spectrum_error(pred, truth, bands: SpectrumBands | None = None) -> dict[str, float]:
    """Mean relative spectrum error |E_pred - E_true| / max(E_true, eps) per band."""
    bands = bands or SpectrumBands()
    k, e_pred = radial_spectrum(pred)
    k_true, e_true = radial_spectrum(truth)
    if not np.array_equal(k, k_true):
        raise ShapeError("Prediction and truth frames differ in size")
    rel = np.abs(e_pred - e_true) / np.maximum(e_true, bands.eps)
    out = {}
    for name, (lo, hi) in bands.items():
        in_band = (k >= lo) & (k < hi)
        out[name] = float(rel[in_band].mean()) if np.any(in_band) else float("nan")
    return out

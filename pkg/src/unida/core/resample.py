"""Separable resampling: block means at integer reductions, bilinear otherwise."""

__all__ = ["bilinear_matrix", "resize_bilinear"]

from functools import lru_cache

import numpy as np

from unida.common.errors import ShapeError


@lru_cache(maxsize=64)
def _bilinear_matrix(n_in: int, n_out: int) -> np.ndarray:
    if n_in % n_out == 0:
        # integer reduction: area average over each block
        factor = n_in // n_out
        weights = np.kron(np.eye(n_out), np.full((1, factor), 1.0 / factor))
        weights.setflags(write=False)
        return weights
    scale = n_in / n_out
    weights = np.zeros((n_out, n_in))
    for i in range(n_out):
        # half-pixel centers, clamped at the borders
        src = (i + 0.5) * scale - 0.5
        src = min(max(src, 0.0), n_in - 1.0)
        lo = int(np.floor(src))
        hi = min(lo + 1, n_in - 1)
        frac = src - lo
        weights[i, lo] += 1.0 - frac
        weights[i, hi] += frac
    weights.setflags(write=False)
    return weights


def bilinear_matrix(n_in: int, n_out: int) -> np.ndarray:
    """1-D bilinear interpolation weights mapping `n_in` samples to `n_out`.

    Integer reduction factors average each block of `n_in // n_out` inputs, so the separable
    2-D map is the block mean. Other ratios interpolate between the two nearest half-pixel
    centers.
    """
    if n_in < 1 or n_out < 1:
        raise ShapeError(f"Resampling extents must be positive, got {n_in} -> {n_out}")
    return _bilinear_matrix(int(n_in), int(n_out))


def resize_bilinear(fields: np.ndarray, out_shape: tuple[int, int]) -> np.ndarray:
    """Resize the two trailing axes of `fields` to `out_shape`."""
    fields = np.asarray(fields, dtype=np.float64)
    rows = bilinear_matrix(fields.shape[-2], out_shape[0])
    cols = bilinear_matrix(fields.shape[-1], out_shape[1])
    return np.einsum("ih,...hw,jw->...ij", rows, fields, cols)

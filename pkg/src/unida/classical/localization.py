"""Gaspari-Cohn covariance localization on (optionally periodic) grids."""

__all__ = [
    "LocalizationConfig",
    "gaspari_cohn",
    "grid_distance",
    "gc_taper_matrix",
    "state_coords",
    "observation_coords",
]

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from unida.common.errors import ValidationError
from unida.observe.operators import ObsOperator, SparseMask


class LocalizationConfig(BaseModel):
    """Localization settings.

    Attributes:
        c_loc (float): compact-support radius in grid points; the taper vanishes at and beyond it.
        periodic (bool): measure distances on the torus.
    """

    model_config = ConfigDict(frozen=True, extra="forbid")

    c_loc: float = Field(default=15.0, gt=0)
    periodic: bool = True

    @property
    def half_width(self) -> float:
        """The Gaspari-Cohn length c, with support [0, 2c]."""
        return self.c_loc / 2.0


def gaspari_cohn(d, c: float) -> np.ndarray:
    """Fifth-order piecewise-rational taper of distance `d` with support [0, 2c].

    Example:
        >>> round(float(gaspari_cohn(1.0, 1.0)), 6)
        0.208333
    """
    if c <= 0:
        raise ValidationError(f"Gaspari-Cohn length must be positive, got {c}")
    r = np.abs(np.asarray(d, dtype=np.float64)) / c
    out = np.zeros_like(r)
    inner = r <= 1.0
    outer = (r > 1.0) & (r < 2.0)
    ri = r[inner]
    out[inner] = -0.25 * ri**5 + 0.5 * ri**4 + 0.625 * ri**3 - 5.0 / 3.0 * ri**2 + 1.0
    ro = r[outer]
    out[outer] = (
        ro**5 / 12.0 - 0.5 * ro**4 + 0.625 * ro**3 + 5.0 / 3.0 * ro**2 - 5.0 * ro + 4.0
    ) - 2.0 / (3.0 * ro)
    return np.clip(out, 0.0, 1.0)


def grid_distance(
    coords_a: np.ndarray,
    coords_b: np.ndarray,
    grid_shape: tuple[int, int],
    periodic: bool = True,
) -> np.ndarray:
    """Euclidean distances `[n_a, n_b]` between `(row, col)` coordinates."""
    a = np.asarray(coords_a, dtype=np.float64)[:, np.newaxis, :]
    b = np.asarray(coords_b, dtype=np.float64)[np.newaxis, :, :]
    delta = np.abs(a - b)
    if periodic:
        extent = np.asarray(grid_shape, dtype=np.float64)
        delta = np.minimum(delta, extent - delta)
    return np.sqrt(np.sum(delta**2, axis=-1))


def gc_taper_matrix(
    coords_a: np.ndarray,
    coords_b: np.ndarray,
    loc: LocalizationConfig,
    grid_shape: tuple[int, int],
) -> np.ndarray:
    """Taper between two coordinate sets; symmetric with unit diagonal when they coincide."""
    distance = grid_distance(coords_a, coords_b, grid_shape, loc.periodic)
    return gaspari_cohn(distance, loc.half_width)


def state_coords(frame_shape: tuple[int, int, int]) -> np.ndarray:
    """`(row, col)` of every entry of a flattened `[C, H, W]` frame."""
    C, H, W = frame_shape
    rows, cols = np.meshgrid(np.arange(H), np.arange(W), indexing="ij")
    pixels = np.stack([rows.ravel(), cols.ravel()], axis=1)
    return np.tile(pixels, (C, 1))


def observation_coords(op: ObsOperator) -> np.ndarray:
    """`(row, col)` of every observed entry; only pixel masks have point locations."""
    if not isinstance(op, SparseMask):
        raise ValidationError(f"Localization needs point observations, got operator '{op.kind}'")
    return np.tile(op.pixel_coords, (op.frame_shape[0], 1))

"""Affine normalizations and the raw <-> data-space noise conversion.

A normalization maps raw values to data space as `(x - a_c) / b_c` per channel, so noise of
standard deviation sigma in data space is exactly `b_c * sigma` in raw units.
"""

__all__ = [
    "Normalization",
    "convert_noise",
    "NS_MINMAX",
    "SEVIR_MINMAX",
    "ERA5_ZSCORE",
    "ERA5_CHANNELS",
]

from dataclasses import dataclass
from typing import Literal

import numpy as np

from unida.common.errors import ValidationError

NormKind = Literal["minmax", "zscore", "identity"]


@dataclass(frozen=True, eq=False)
class Normalization:
    """Per-channel affine normalization.

    Attributes:
        kind (str): one of "minmax", "zscore", "identity".
        offset (np.ndarray): a_c per channel (x_min or mean).
        scale (np.ndarray): b_c per channel (x_max - x_min or std), all positive.
    """

    kind: NormKind
    offset: np.ndarray
    scale: np.ndarray

    def __post_init__(self):
        offset = np.atleast_1d(np.asarray(self.offset, dtype=np.float64))
        scale = np.atleast_1d(np.asarray(self.scale, dtype=np.float64))
        if offset.shape != scale.shape:
            raise ValidationError(f"offset {offset.shape} and scale {scale.shape} differ")
        if np.any(scale <= 0):
            raise ValidationError(f"Normalization scale must be positive, got {scale}")
        object.__setattr__(self, "offset", offset)
        object.__setattr__(self, "scale", scale)

    @classmethod
    def identity(cls, channels: int = 1) -> "Normalization":
        return cls("identity", np.zeros(channels), np.ones(channels))

    @classmethod
    def minmax(cls, x_min, x_max) -> "Normalization":
        x_min = np.atleast_1d(np.asarray(x_min, dtype=np.float64))
        return cls("minmax", x_min, np.atleast_1d(x_max) - x_min)

    @classmethod
    def zscore(cls, mean, std) -> "Normalization":
        return cls("zscore", mean, std)

    @property
    def channels(self) -> int:
        return self.offset.shape[0]

    def _broadcast(self, values: np.ndarray, channel_axis: int) -> tuple[np.ndarray, np.ndarray]:
        shape = [1] * values.ndim
        shape[channel_axis] = self.channels
        return self.offset.reshape(shape), self.scale.reshape(shape)

    def normalize(self, values, channel_axis: int = -3) -> np.ndarray:
        values = np.asarray(values, dtype=np.float64)
        a, b = self._broadcast(values, channel_axis)
        return (values - a) / b

    def denormalize(self, values, channel_axis: int = -3) -> np.ndarray:
        values = np.asarray(values, dtype=np.float64)
        a, b = self._broadcast(values, channel_axis)
        return values * b + a


def convert_noise(norm: Normalization, sigma_data: float) -> np.ndarray:
    """Raw-space noise std per channel: sigma_raw_c = b_c * sigma_data.

    Example:
        >>> float(convert_noise(SEVIR_MINMAX, 0.05)[0])
        12.75
    """
    if not sigma_data > 0:
        raise ValidationError(f"sigma_data must be positive, got {sigma_data}")
    return norm.scale * sigma_data


NS_MINMAX = Normalization.minmax(-19.16, 17.42)
SEVIR_MINMAX = Normalization.minmax(0.0, 255.0)
ERA5_CHANNELS = ("z500", "t850", "u10", "v10")
ERA5_ZSCORE = Normalization.zscore(
    mean=[53859.76, 273.13, -0.148, -0.224],
    std=[3137.37, 15.03, 5.249, 4.410],
)

"""Cosine variance schedule with a strided DDIM sampling grid."""

__all__ = ["NoiseSchedule", "ALPHA_BAR_FLOOR"]

import json
from dataclasses import dataclass
from functools import cached_property

import numpy as np
from aibs_informatics_core.utils.hashing import sha256_hexdigest

from unida.common.errors import NumericalError, ValidationError

ALPHA_BAR_FLOOR = 1e-5


@dataclass(frozen=True, eq=False)
class NoiseSchedule:
    """Signal-retention table alpha_bar over base steps 0..T_base and a T_s-step sampling grid.

    Grid step `i` maps to base step `round(i * T_base / T_s)`; every public method takes grid
    steps.

    Attributes:
        alpha_bar_base (np.ndarray): `[T_base + 1]`, alpha_bar[0] = 1, strictly decreasing.
        T_s (int): sampling grid size.
    """

    alpha_bar_base: np.ndarray
    T_s: int
    name: str = "custom"

    def __post_init__(self):
        ab = np.asarray(self.alpha_bar_base, dtype=np.float64)
        if ab.ndim != 1 or ab.shape[0] < 2:
            raise ValidationError("alpha_bar table needs at least two entries")
        if ab[0] != 1.0 or np.any(np.diff(ab) >= 0) or ab[-1] <= 0:
            raise ValidationError("alpha_bar must start at 1, decrease strictly and stay > 0")
        if not 1 <= self.T_s <= ab.shape[0] - 1:
            raise ValidationError(f"T_s must be in [1, {ab.shape[0] - 1}], got {self.T_s}")
        ab.setflags(write=False)
        object.__setattr__(self, "alpha_bar_base", ab)

    @classmethod
    def cosine(
        cls, T_base: int = 1000, T_s: int = 100, s: float = 0.008, floor: float = ALPHA_BAR_FLOOR
    ) -> "NoiseSchedule":
        """alpha_bar(t) = floor + (1 - floor) * f(t)/f(0), f = cos^2((t/T + s)/(1 + s) pi/2)."""
        t = np.arange(T_base + 1) / T_base
        f = np.cos((t + s) / (1 + s) * np.pi / 2) ** 2
        ab = floor + (1 - floor) * f / f[0]
        ab[0] = 1.0
        return cls(ab, T_s=T_s, name=f"cosine(T_base={T_base},s={s},floor={floor})")

    @property
    def T_base(self) -> int:
        return self.alpha_bar_base.shape[0] - 1

    @cached_property
    def grid_index(self) -> np.ndarray:
        return np.rint(np.arange(self.T_s + 1) * self.T_base / self.T_s).astype(np.int64)

    @cached_property
    def grid_alpha_bar(self) -> np.ndarray:
        return self.alpha_bar_base[self.grid_index]

    def alpha_bar(self, t) -> np.ndarray:
        """alpha_bar at grid steps `t` (any integer array shape)."""
        t = np.asarray(t, dtype=np.int64)
        if np.any(t < 0) or np.any(t > self.T_s):
            raise ValidationError(f"Grid steps must lie in [0, {self.T_s}]")
        return self.grid_alpha_bar[t]

    def signal_noise(self, t) -> tuple[np.ndarray, np.ndarray]:
        """(sqrt(alpha_bar), sqrt(1 - alpha_bar)) at grid steps `t`."""
        ab = self.alpha_bar(t)
        if np.any(ab <= 0):
            raise NumericalError("alpha_bar reached zero; Tweedie inversion is singular")
        return np.sqrt(ab), np.sqrt(1.0 - ab)

    @cached_property
    def schedule_hash(self) -> str:
        content = {"name": self.name, "T_s": self.T_s, "alpha_bar": self.alpha_bar_base.tolist()}
        return sha256_hexdigest(json.dumps(content, sort_keys=True))

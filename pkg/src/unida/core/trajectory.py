"""Trajectory value type.

A trajectory is an immutable float64 array of shape `[K, C, H, W]` (frame axis slowest). Flat
state-space models (the linear-Gaussian oracle) are viewed as `[K, 1, 1, D]`.
"""

__all__ = ["Trajectory", "as_float_array"]

from dataclasses import dataclass
from typing import Self

import numpy as np

from unida.common.errors import ShapeError, ValidationError


def as_float_array(values, *, allow_nonfinite: bool = False, name: str = "array") -> np.ndarray:
    """Convert to a contiguous float64 array, checking finiteness.

    Args:
        values: array-like input.
        allow_nonfinite (bool): accept NaN/inf entries. Defaults to False.
        name (str): label used in error messages.

    Raises:
        ValidationError: if non-finite entries are present and not allowed.

    Returns:
        np.ndarray: a float64 C-contiguous array.
    """
    arr = np.ascontiguousarray(values, dtype=np.float64)
    if not allow_nonfinite and not np.all(np.isfinite(arr)):
        raise ValidationError(f"{name} contains non-finite values")
    return arr


@dataclass(frozen=True, eq=False)
class Trajectory:
    """A sequence of K frames with C channels on an H x W grid.

    Attributes:
        frames (np.ndarray): read-only float64 array with shape `[K, C, H, W]`.
    """

    frames: np.ndarray

    def __post_init__(self):
        arr = as_float_array(self.frames, name="trajectory frames")
        if arr.ndim != 4:
            raise ShapeError(f"Trajectory frames must be 4-d [K,C,H,W], got shape {arr.shape}")
        if min(arr.shape) < 1:
            raise ShapeError(f"Trajectory extents must be >= 1, got {arr.shape}")
        if arr is self.frames:
            arr = arr.copy()
        arr.setflags(write=False)
        object.__setattr__(self, "frames", arr)

    @classmethod
    def from_states(cls, states) -> Self:
        """Wrap a `[K, D]` state sequence as a `[K, 1, 1, D]` trajectory."""
        arr = np.asarray(states, dtype=np.float64)
        if arr.ndim != 2:
            raise ShapeError(f"Expected a [K, D] state array, got shape {arr.shape}")
        return cls(arr.reshape(arr.shape[0], 1, 1, arr.shape[1]))

    @property
    def K(self) -> int:
        return self.frames.shape[0]

    @property
    def C(self) -> int:
        return self.frames.shape[1]

    @property
    def H(self) -> int:
        return self.frames.shape[2]

    @property
    def W(self) -> int:
        return self.frames.shape[3]

    @property
    def frame_shape(self) -> tuple[int, int, int]:
        return self.frames.shape[1:]  # type: ignore[return-value]

    @property
    def state_dim(self) -> int:
        return self.C * self.H * self.W

    @property
    def states(self) -> np.ndarray:
        """Frames flattened to `[K, C*H*W]` (row-major)."""
        return self.frames.reshape(self.K, self.state_dim)

    def __len__(self) -> int:
        return self.K

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Trajectory):
            return NotImplemented
        return self.frames.shape == other.frames.shape and bool(
            np.array_equal(self.frames, other.frames)
        )

    def __repr__(self) -> str:
        return f"Trajectory(K={self.K}, C={self.C}, H={self.H}, W={self.W})"

"""Scheduling matrices S^(u): per-frame diffusion steps at each reverse iteration.

    S[k, l] = clip(T - l + u*k, 0, T),   k = 0..K-1,  l = 0..L,  L = T + u*(K-1)

u = T runs frames one after another (filtering), u = 0 descends all frames in lockstep
(full-sequence smoothing) and 0 < u < T gives a staggered pyramid (fixed-lag smoothing).
Frame indices are 0-based throughout the code.
"""

__all__ = [
    "Regime",
    "SchedulingMatrix",
    "build_schedule",
    "active_set",
    "schedule_to_csv",
]

import io
import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from unida.common.errors import ShapeError, ValidationError


class Regime(str, Enum):
    AR = "ar"
    PYR = "pyr"
    FS = "fs"

    def resolve_u(self, T: int, u: int | None = None) -> int:
        """Uncertainty scale for this regime on a T-step grid.

        PYR accepts an explicit 0 < u < T and otherwise uses ceil(T/4).
        """
        if self is Regime.AR:
            return T
        if self is Regime.FS:
            return 0
        u = math.ceil(T / 4) if u is None else int(u)
        if not 0 < u < T:
            raise ValidationError(f"Pyramid schedules need 0 < u < T={T}, got u={u}")
        return u


@dataclass(frozen=True, eq=False)
class SchedulingMatrix:
    """Integer step grid of shape `[K, L+1]`.

    Attributes:
        entries (np.ndarray): S[k, l] in [0, T].
        T (int): steps on the sampling grid.
        u (int): uncertainty scale.
        n_context (int): leading rows clamped at 0 (clean context frames).
    """

    entries: np.ndarray
    T: int
    u: int
    n_context: int = 0

    def __post_init__(self):
        entries = np.asarray(self.entries, dtype=np.int64)
        if entries.ndim != 2 or entries.shape[1] < 2:
            raise ShapeError(f"Schedule entries must be [K, L+1] with L >= 1: {entries.shape}")
        entries.setflags(write=False)
        object.__setattr__(self, "entries", entries)

    @property
    def K(self) -> int:
        return self.entries.shape[0]

    @property
    def L(self) -> int:
        """Number of reverse iterations."""
        return self.entries.shape[1] - 1

    def column(self, ell: int) -> np.ndarray:
        return self.entries[:, ell]

    def with_context(self, n_context: int) -> "SchedulingMatrix":
        """Prepend `n_context` rows that stay at step 0 for every iteration."""
        if n_context < 0:
            raise ValidationError(f"n_context must be >= 0, got {n_context}")
        zeros = np.zeros((n_context, self.entries.shape[1]), dtype=np.int64)
        return SchedulingMatrix(
            np.vstack([zeros, self.entries]), self.T, self.u, self.n_context + n_context
        )

    def active_window_bound(self) -> int:
        """Largest possible active set: all K for u = 0, else ceil(T/u) + 1."""
        return self.K if self.u == 0 else math.ceil(self.T / self.u) + 1


def build_schedule(K: int, T: int, u: int) -> SchedulingMatrix:
    """Build S^(u) over columns l = 0..L inclusive.

    Args:
        K (int): frames (>= 1).
        T (int): sampling-grid steps (>= 1).
        u (int): non-negative integer uncertainty scale.

    Example:
        >>> build_schedule(3, 4, 2).entries[1].tolist()
        [4, 4, 4, 3, 2, 1, 0, 0, 0]
    """
    if K < 1 or T < 1:
        raise ValidationError(f"K and T must be >= 1, got K={K}, T={T}")
    if int(u) != u or u < 0:
        raise ValidationError(f"u must be a non-negative integer, got {u}")
    u = int(u)
    L = T + u * (K - 1)
    k = np.arange(K)[:, np.newaxis]
    ell = np.arange(L + 1)[np.newaxis, :]
    return SchedulingMatrix(np.clip(T - ell + u * k, 0, T), T=T, u=u)


def active_set(S: SchedulingMatrix, ell: int) -> frozenset[int]:
    """Frames whose step decreases between iteration `ell` and `ell + 1`."""
    if not 0 <= ell < S.L:
        raise ShapeError(f"Iteration {ell} out of range [0, {S.L})")
    moving = S.entries[:, ell + 1] < S.entries[:, ell]
    return frozenset(int(k) for k in np.flatnonzero(moving))


def schedule_to_csv(S: SchedulingMatrix) -> str:
    """Rows are frames, columns are iterations 0..L."""
    buffer = io.StringIO()
    np.savetxt(buffer, S.entries, fmt="%d", delimiter=",")
    return buffer.getvalue()

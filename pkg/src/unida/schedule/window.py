"""Sliding windows for trajectories longer than the model window."""

__all__ = ["sliding_window"]

import math

from unida.common.errors import CapacityError, ValidationError


def sliding_window(total_frames: int, K: int, u: int) -> list[tuple[int, int]]:
    """Window starts and advances covering `total_frames` with windows of K frames.

    The advance is ceil(K/u) (at least 1) for u > 0. The final window is aligned to the end of
    the sequence and reports an advance of 0.

    Raises:
        CapacityError: for u = 0 when the sequence does not fit in one window.

    Example:
        >>> sliding_window(50, 30, 10)[:3]
        [(0, 3), (3, 3), (6, 3)]
    """
    if K < 1 or total_frames < K:
        raise ValidationError(f"Need total_frames >= K >= 1, got {total_frames}, {K}")
    if u < 0:
        raise ValidationError(f"u must be >= 0, got {u}")
    if total_frames == K:
        return [(0, 0)]
    if u == 0:
        raise CapacityError(
            f"Full-sequence schedules cannot slide: {total_frames} frames exceed window K={K}; "
            "split the sequence into chunks of K frames and run each separately"
        )
    advance = max(1, math.ceil(K / u))
    starts = list(range(0, total_frames - K, advance))
    if starts[-1] != total_frames - K:
        starts.append(total_frames - K)
    return [(s, n - s) for s, n in zip(starts, starts[1:])] + [(starts[-1], 0)]

"""DDIM reverse step."""

__all__ = ["ddim_step", "ddim_sigma"]

import logging

import numpy as np

from unida.common.errors import ValidationError
from unida.core.rng import RngStream
from unida.denoise.base import tweedie
from unida.denoise.noise_schedule import NoiseSchedule

logger = logging.getLogger(__name__)


def ddim_sigma(t, t_next, sched: NoiseSchedule, eta: float) -> np.ndarray:
    """sigma_t = eta * sqrt((1 - ab') / (1 - ab) * (1 - ab / ab'))."""
    ab = sched.alpha_bar(t)
    ab_next = sched.alpha_bar(t_next)
    ratio = np.divide(1.0 - ab_next, 1.0 - ab, out=np.zeros_like(ab), where=ab < 1.0)
    return eta * np.sqrt(np.clip(ratio * (1.0 - ab / ab_next), 0.0, None))


def ddim_step(
    x: np.ndarray,
    t,
    t_next,
    eps_pred: np.ndarray,
    sched: NoiseSchedule,
    eta: float = 0.0,
    rng: RngStream | None = None,
) -> tuple[np.ndarray, bool]:
    """Move states `[..., K, D]` from per-frame steps `t` to `t_next`.

    x' = sqrt(ab') x0_hat + sqrt(1 - ab' - sigma^2) eps_hat + sigma z

    Frames with t_next == t are returned unchanged.

    Returns:
        Tuple of the new states and whether sigma had to be clamped for any frame.
    """
    t = np.asarray(t, dtype=np.int64)
    t_next = np.asarray(t_next, dtype=np.int64)
    x0 = tweedie(x, t, eps_pred, sched)
    ab_next = sched.alpha_bar(t_next)
    sigma = ddim_sigma(t, t_next, sched, eta)
    direction = 1.0 - ab_next - sigma**2
    clamped = bool(np.any(direction < 0))
    if clamped:
        logger.warning("DDIM variance exceeds the available noise budget; clamping sigma")
        sigma = np.where(direction < 0, np.sqrt(1.0 - ab_next), sigma)
        direction = np.clip(direction, 0.0, None)
    out = np.sqrt(ab_next)[:, None] * x0 + np.sqrt(direction)[:, None] * eps_pred
    if np.any(sigma > 0):
        if rng is None:
            raise ValidationError("A random stream is required when ddim_eta > 0")
        out = out + sigma[:, None] * rng.standard_normal(x.shape)
    moving = (t_next < t)[:, None]
    return np.where(moving, out, x), clamped

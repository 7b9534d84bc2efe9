"""Noise-level-aware observation guidance."""

__all__ = ["GuidanceConfig", "guidance_weight", "observation_loss"]

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from unida.common.errors import ShapeError
from unida.denoise.noise_schedule import NoiseSchedule
from unida.observe.observations import ObservationSet


class GuidanceConfig(BaseModel):
    """Guidance hyperparameters.

    Attributes:
        zeta (float): guidance step scale.
        gamma_guidance (float): weight of the Tweedie prediction variance in the residual scale.
        sigma_y (float): observation noise std in data space.
        ddim_eta (float): DDIM stochasticity (0 is deterministic).
    """

    model_config = ConfigDict(frozen=True, extra="forbid")

    zeta: float = Field(default=0.0, ge=0)
    gamma_guidance: float = Field(default=0.0, ge=0)
    sigma_y: float = Field(default=0.05, gt=0)
    ddim_eta: float = Field(default=0.0, ge=0, le=1)


def guidance_weight(t, sched: NoiseSchedule, cfg: GuidanceConfig) -> np.ndarray:
    """w(t) = (sigma_y^2 + gamma * (1 - alpha_bar_t) / alpha_bar_t)^(-1/2), vectorized over t."""
    ab = sched.alpha_bar(t)
    return (cfg.sigma_y**2 + cfg.gamma_guidance * (1.0 - ab) / ab) ** -0.5


def observation_loss(
    xhat0: np.ndarray,
    obs: ObservationSet,
    active,
    t,
    sched: NoiseSchedule,
    cfg: GuidanceConfig,
) -> tuple[float, np.ndarray]:
    """Aggregate weighted residuals over the active window.

    L = sum_{k active, observed} w(t_k) ||y_k - A(x0_hat_k)||^2, summed over any leading batch
    axes of `xhat0` (`[..., K, D]`).

    Returns:
        Tuple of the loss and its gradient with respect to `xhat0` (zero for frames that are
        inactive or unobserved).
    """
    xhat0 = np.asarray(xhat0, dtype=np.float64)
    K = xhat0.shape[-2]
    if obs.frame_indices and obs.frame_indices[-1] >= K:
        raise ShapeError(f"Observation of frame {obs.frame_indices[-1]} outside window K={K}")
    active_mask = np.zeros(K, dtype=bool)
    active_mask[list(active)] = True
    weights = guidance_weight(np.asarray(t, dtype=np.int64), sched, cfg)
    cotangent = np.zeros_like(xhat0)
    loss = 0.0
    op = obs.operator
    for k, y in obs.by_frame().items():
        if not active_mask[k]:
            continue
        resid = op.apply_flat(xhat0[..., k, :]) - y
        loss += float(weights[k] * np.sum(resid**2))
        cotangent[..., k, :] = 2.0 * weights[k] * op.adjoint_flat(resid)
    return loss, cotangent

"""Guided reverse sampling over a scheduling matrix.

At each iteration l every frame sits at its own step S[k, l]. The denoiser predicts noise for
the whole window, Tweedie estimates give clean frames, the weighted observation loss over the
active frames is differentiated exactly through Tweedie and the denoiser VJP, and active frames
take a DDIM step followed by the guidance correction -zeta * g_k.
"""

__all__ = [
    "AssimilationResult",
    "assimilate",
    "assimilate_sliding",
    "regime_schedule",
]

import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

from unida.common.errors import DivergenceError, ShapeError, ValidationError
from unida.core.container import write_sidecar, write_tensor
from unida.core.rng import RngStream
from unida.core.trajectory import Trajectory
from unida.denoise.base import Denoiser
from unida.observe.observations import ObservationSet
from unida.sampler.ddim import ddim_step
from unida.sampler.guidance import GuidanceConfig, observation_loss
from unida.schedule.matrix import (
    Regime,
    SchedulingMatrix,
    active_set,
    build_schedule,
)
from unida.schedule.window import sliding_window

logger = logging.getLogger(__name__)


@dataclass
class AssimilationResult:
    """Output of a guided sampling run.

    Attributes:
        samples (np.ndarray): `[n_samples, K, C, H, W]` clean trajectories.
        loss (list[float]): observation loss per iteration.
        active_sizes (list[int]): active-set size per iteration.
        warnings (list[str]): non-fatal events (e.g. clamped DDIM variance).
        config (dict): echo of the guidance configuration and schedule.
        seed (int | None): master seed of the run.
    """

    samples: np.ndarray
    loss: list[float] = field(default_factory=list)
    active_sizes: list[int] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)
    config: dict[str, Any] = field(default_factory=dict)
    seed: int | None = None

    @property
    def trajectory(self) -> Trajectory:
        """Sample mean (the single sample when n_samples is 1)."""
        return Trajectory(self.samples.mean(axis=0))

    def save(self, path: str | Path) -> Path:
        path = write_tensor(path, self.trajectory.frames)
        write_sidecar(
            path,
            {
                "loss": self.loss,
                "active_sizes": self.active_sizes,
                "warnings": self.warnings,
                "config": self.config,
                "seed": self.seed,
                "n_samples": int(self.samples.shape[0]),
            },
        )
        return path


def regime_schedule(
    regime: Regime | str, K: int, T: int, u: int | None = None, n_context: int = 0
) -> SchedulingMatrix:
    """Schedule for `regime` over K frames, the first `n_context` of which are clean context."""
    regime = Regime(regime)
    if not 0 <= n_context < K:
        raise ValidationError(f"Context length {n_context} must be in [0, K={K})")
    S = build_schedule(K - n_context, T, regime.resolve_u(T, u))
    return S.with_context(n_context) if n_context else S


def _initial_states(
    K: int, D: int, n_samples: int, n_context: int, context, rng: RngStream
) -> np.ndarray:
    x = rng.standard_normal((n_samples, K, D))
    if n_context:
        ctx = np.asarray(context, dtype=np.float64)
        if ctx.ndim == 2:
            ctx = np.broadcast_to(ctx, (n_samples, *ctx.shape))
        if ctx.shape != (n_samples, n_context, D):
            raise ShapeError(f"Context must be [{n_context}, {D}] or [n, ...], got {ctx.shape}")
        x[:, :n_context] = ctx
    return x


def run_reverse(
    denoiser: Denoiser,
    obs: ObservationSet | None,
    S: SchedulingMatrix,
    cfg: GuidanceConfig,
    x: np.ndarray,
    rng: RngStream,
    result: AssimilationResult,
) -> np.ndarray:
    """Run all L iterations of `S` from initial states `x` `[n, K, D]`."""
    sched = denoiser.schedule
    guided = obs is not None and cfg.zeta > 0 and len(obs.frame_indices) > 0
    for ell in range(S.L):
        t, t_next = S.column(ell), S.column(ell + 1)
        active = active_set(S, ell)
        eps = denoiser.predict_eps(x, t)
        a, s = sched.signal_noise(t)
        a, s = a[:, None], s[:, None]
        x0 = (x - s * eps) / a
        loss = 0.0
        if obs is not None and obs.frame_indices:
            loss, cot = observation_loss(x0, obs, active, t, sched, cfg)
        x_next, clamped = ddim_step(x, t, t_next, eps, sched, cfg.ddim_eta, rng)
        if guided and loss > 0:
            # d x0 / d x = (I - s * d eps / d x) / a, applied as a VJP
            grad = cot / a - denoiser.vjp(x, t, cot * s / a)
            moving = (t_next < t)[:, None]
            x_next = np.where(moving, x_next - cfg.zeta * grad, x_next)
        if clamped:
            result.warnings.append(f"iteration {ell}: DDIM sigma clamped")
        if not np.all(np.isfinite(x_next)):
            raise DivergenceError("Sampler state became non-finite", step=ell)
        x = x_next
        result.loss.append(loss)
        result.active_sizes.append(len(active))
        logger.debug(f"iteration {ell}/{S.L}: active={len(active)}, loss={loss:.6g}")
    return x


def assimilate(
    denoiser: Denoiser,
    obs: ObservationSet | None,
    S: SchedulingMatrix,
    cfg: GuidanceConfig,
    context=None,
    rng: RngStream | None = None,
    n_samples: int = 1,
    frame_shape: tuple[int, int, int] | None = None,
) -> AssimilationResult:
    """Estimate a trajectory from observations with guided reverse sampling.

    Args:
        denoiser (Denoiser): any denoiser over `[K, D]` windows; reused unchanged across regimes.
        obs (ObservationSet | None): observations indexed by window frame; None samples the prior.
        S (SchedulingMatrix): schedule with K rows (including clamped context rows).
        cfg (GuidanceConfig): guidance settings.
        context: clean frames `[C, D]` (or per sample `[n, C, D]`) for the first
            `S.n_context` frames.
        rng (RngStream): random stream; defaults to seed 0.
        n_samples (int): independent chains run as one batch.
        frame_shape: frame layout of the result; defaults to the operator's frame shape.

    Raises:
        ShapeError: when schedule, denoiser, observations or context disagree.
        DivergenceError: when the state becomes non-finite.

    Returns:
        AssimilationResult: samples and per-iteration diagnostics.
    """
    rng = rng or RngStream(0)
    K, D = denoiser.K, denoiser.D
    if S.K != K:
        raise ShapeError(f"Schedule has {S.K} frames, denoiser expects K={K}")
    n_context = S.n_context
    if (context is None) != (n_context == 0):
        raise ValidationError(
            f"Schedule clamps {n_context} context frames but context was "
            f"{'not ' if context is None else ''}provided"
        )
    if obs is not None:
        if obs.operator.state_dim != D:
            raise ShapeError(f"Operator acts on dim {obs.operator.state_dim}, states have D={D}")
        if obs.frame_indices and obs.frame_indices[-1] >= K:
            raise ShapeError(f"Observations reach frame {obs.frame_indices[-1]} beyond K={K}")
        frame_shape = frame_shape or obs.operator.frame_shape
    frame_shape = frame_shape or (1, 1, D)
    result = AssimilationResult(
        samples=np.empty(0),
        config={**cfg.model_dump(), "K": K, "T": S.T, "u": S.u, "n_context": n_context},
        seed=rng.master_seed,
    )
    x = _initial_states(K, D, n_samples, n_context, context, rng)
    x = run_reverse(denoiser, obs, S, cfg, x, rng, result)
    result.samples = x.reshape(n_samples, K, *frame_shape)
    logger.info(
        f"Assimilated K={K} frames over L={S.L} iterations (u={S.u}, context={n_context})"
    )
    return result


def assimilate_sliding(
    denoiser: Denoiser,
    obs: ObservationSet,
    total_frames: int,
    u: int,
    cfg: GuidanceConfig,
    context=None,
    rng: RngStream | None = None,
    n_samples: int = 1,
) -> AssimilationResult:
    """Assimilate a sequence longer than the denoiser window.

    Windows of `denoiser.K` frames advance by ceil(K/u); frames produced by earlier windows are
    clamped as context in later ones. `context` optionally provides the first clean frames.
    """
    rng = rng or RngStream(0)
    K, D, T = denoiser.K, denoiser.D, denoiser.schedule.T_s
    done = 0 if context is None else np.asarray(context).shape[-2]
    x = np.zeros((n_samples, total_frames, D))
    if done:
        x[:, :done] = context
    result = AssimilationResult(
        samples=np.empty(0),
        config={**cfg.model_dump(), "K": K, "T": T, "u": u, "total_frames": total_frames},
        seed=rng.master_seed,
    )
    for index, (start, _) in enumerate(sliding_window(total_frames, K, u)):
        n_ctx = max(0, done - start)
        if n_ctx >= K:
            continue
        window_obs = obs.shifted(start, K)
        S = build_schedule(K - n_ctx, T, u)
        if n_ctx:
            S = S.with_context(n_ctx)
        init = _initial_states(
            K, D, n_samples, n_ctx, x[:, start : start + n_ctx] if n_ctx else None,
            rng.spawn(2 * index),
        )
        window_result = AssimilationResult(samples=np.empty(0))
        out = run_reverse(
            denoiser, window_obs, S, cfg, init, rng.spawn(2 * index + 1), window_result
        )
        x[:, start + n_ctx : start + K] = out[:, n_ctx:]
        done = start + K
        result.loss.extend(window_result.loss)
        result.active_sizes.extend(window_result.active_sizes)
        result.warnings.extend(f"window {index}: {w}" for w in window_result.warnings)
    result.samples = x.reshape(n_samples, total_frames, *obs.operator.frame_shape)
    return result

"""Causality-aware training of affine denoisers.

Minibatch SGD on

    L = sum_k lambda(t_k) || eps_k - eps_hat_k(x^(t)) ||^2

with per-sample step patterns from `sample_cat_levels`. Gradients of the affine model are
closed form: dL/dTheta = 2 (W * r)^T x, dL/db = 2 sum(W * r), with r = eps_hat - eps.
"""

__all__ = [
    "TrainingConfig",
    "train_denoiser",
    "denoising_loss",
    "gaussian_risk",
    "as_state_windows",
]

import logging
from collections import defaultdict
from collections.abc import Callable, Sequence

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from unida.common.errors import DivergenceError, ShapeError
from unida.core.gaussian import GaussianTrajectoryPrior
from unida.core.rng import RngStream
from unida.core.trajectory import Trajectory
from unida.denoise.affine import AffineDenoiser
from unida.denoise.base import DEFAULT_NOISE_CLIP, AffineMapDenoiser, corrupt_states
from unida.denoise.noise_schedule import NoiseSchedule
from unida.schedule.cat import CatConfig, sample_cat_levels

logger = logging.getLogger(__name__)

Checkpoint = Callable[[int, AffineDenoiser, float], None]


class TrainingConfig(BaseModel):
    """SGD settings.

    Attributes:
        steps (int): optimizer steps.
        lr (float): learning rate.
        lr_decay (float): lr_i = lr / (1 + lr_decay * i).
        batch_size (int): trajectories per minibatch.
        noise_clip (float): clip of the standard normal training noise.
    """

    model_config = ConfigDict(extra="forbid")

    steps: int = Field(default=2000, ge=0)
    lr: float = Field(default=0.02, ge=0)
    lr_decay: float = Field(default=0.0, ge=0)
    batch_size: int = Field(default=64, ge=1)
    noise_clip: float = Field(default=DEFAULT_NOISE_CLIP, gt=0)


def as_state_windows(data: np.ndarray | Sequence[Trajectory]) -> np.ndarray:
    """Stack training data as `[n, K_data, D]`."""
    if isinstance(data, np.ndarray):
        arr = np.asarray(data, dtype=np.float64)
    else:
        arr = np.stack([traj.states for traj in data])
    if arr.ndim != 3:
        raise ShapeError(f"Training data must be [n, K, D], got {arr.shape}")
    return arr


def train_denoiser(
    model: AffineDenoiser,
    data: np.ndarray | Sequence[Trajectory],
    cat: CatConfig,
    sched: NoiseSchedule,
    steps: int,
    lr: float,
    rng: RngStream,
    batch_size: int = 64,
    lr_decay: float = 0.0,
    noise_clip: float = DEFAULT_NOISE_CLIP,
    weight: Callable[[np.ndarray], np.ndarray] | None = None,
    fixed_pattern: Sequence[int] | None = None,
    checkpoint_every: int | None = None,
    on_checkpoint: Checkpoint | None = None,
) -> AffineDenoiser:
    """Train a copy of `model` and return it.

    Trajectories longer than the model window contribute random windows of `model.K` frames.

    Args:
        model (AffineDenoiser): starting parameters (left unchanged).
        data: `[n, K_data, D]` states or a sequence of trajectories.
        cat (CatConfig): noise-level sampling.
        sched (NoiseSchedule): noise schedule.
        steps (int): SGD steps.
        lr (float): learning rate.
        rng (RngStream): drives windows, step patterns and noise.
        batch_size (int): samples per step.
        lr_decay (float): harmonic learning-rate decay.
        noise_clip (float): noise clip.
        weight: per-step loss weight lambda(t), vectorized over grid steps; 1 when None.
        fixed_pattern: train on this single step pattern instead of sampling.
        checkpoint_every (int | None): call `on_checkpoint` every this many steps (and at 0).
        on_checkpoint: callback receiving (step, model, minibatch loss).

    Raises:
        DivergenceError: when a minibatch loss is non-finite.

    Returns:
        AffineDenoiser: the trained model.
    """
    windows = as_state_windows(data)
    n, K_data, D = windows.shape
    K = model.K
    if D != model.D or K_data < K:
        raise ShapeError(f"Data [{n}, {K_data}, {D}] incompatible with model K={K}, D={model.D}")
    trained = model.copy()
    loss = float("nan")
    for step in range(steps + 1):
        if checkpoint_every and on_checkpoint and step % checkpoint_every == 0:
            on_checkpoint(step, trained, loss)
        if step == steps:
            break
        idx = rng.integers(0, n, size=batch_size)
        starts = rng.integers(0, K_data - K + 1, size=batch_size)
        x0 = np.stack([windows[i, s : s + K] for i, s in zip(idx, starts)])
        if fixed_pattern is not None:
            t = np.tile(np.asarray(fixed_pattern, dtype=np.int64), (batch_size, 1))
        else:
            t = np.stack([sample_cat_levels(K, sched.T_s, cat, rng) for _ in range(batch_size)])
        eps = np.clip(rng.standard_normal(x0.shape), -noise_clip, noise_clip)
        xt = corrupt_states(x0, t, sched, eps)
        groups: dict[tuple[int, ...], list[int]] = defaultdict(list)
        for b in range(batch_size):
            trained.get_or_create(t[b])
            groups[trained.bucket(t[b])].append(b)
        step_lr = lr / (1.0 + lr_decay * step)
        total = 0.0
        for key in sorted(groups):
            members = groups[key]
            X = xt[members].reshape(len(members), -1)
            E = eps[members].reshape(len(members), -1)
            lam = np.ones_like(E) if weight is None else np.repeat(weight(t[members]), D, axis=1)
            theta, offset = trained.params[key]
            resid = X @ theta.T + offset - E
            total += float(np.sum(lam * resid**2))
            weighted = 2.0 * lam * resid / batch_size
            trained.update(key, weighted.T @ X, weighted.sum(axis=0), step_lr)
        loss = total / batch_size
        if not np.isfinite(loss) or not trained.is_finite():
            raise DivergenceError("Denoiser training loss became non-finite", step=step)
        if step % 500 == 0:
            logger.debug(f"train step {step}: loss={loss:.6f}, buckets={len(trained.params)}")
    logger.info(f"Trained affine denoiser for {steps} steps; {len(trained.params)} buckets")
    return trained


def denoising_loss(
    model: AffineMapDenoiser,
    data: np.ndarray | Sequence[Trajectory],
    patterns: Sequence[Sequence[int]],
    sched: NoiseSchedule,
    rng: RngStream,
    noise_clip: float = DEFAULT_NOISE_CLIP,
) -> float:
    """Mean per-sample score-matching loss of `model` over all windows and patterns."""
    windows = as_state_windows(data)[:, : model.K]
    losses = []
    for pattern in patterns:
        t = np.asarray(pattern, dtype=np.int64)
        eps = np.clip(rng.standard_normal(windows.shape), -noise_clip, noise_clip)
        xt = corrupt_states(windows, t, sched, eps)
        losses.append(np.sum((model.predict_eps(xt, t) - eps) ** 2, axis=(-2, -1)).mean())
    return float(np.mean(losses))


def gaussian_risk(
    model: AffineMapDenoiser, prior: GaussianTrajectoryPrior, t, sched: NoiseSchedule
) -> float:
    """Exact expected loss E||eps - A x^(t) - b||^2 under x_0 ~ prior, unclipped noise."""
    t = np.asarray(t, dtype=np.int64)
    A, b = model.affine_map(t)
    a, s = sched.signal_noise(t)
    a = np.repeat(a, prior.D)
    s = np.repeat(s, prior.D)
    n = prior.dim
    noise_part = np.eye(n) - A * s[None, :]
    signal_part = A * a[None, :]
    mean_resid = -signal_part @ prior.mean - b
    cov = noise_part @ noise_part.T + signal_part @ prior.cov @ signal_part.T
    return float(np.trace(cov) + mean_resid @ mean_resid)

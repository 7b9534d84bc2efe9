"""Denoiser contract, per-frame forward corruption and the Tweedie inversion.

Arrays use the state layout `[..., K, D]`: frame axis second to last, flattened frame last.
"""

__all__ = [
    "Denoiser",
    "AffineMapDenoiser",
    "DEFAULT_NOISE_CLIP",
    "WIDE_RANGE_NOISE_CLIP",
    "corrupt",
    "corrupt_states",
    "tweedie",
    "frame_coefficients",
]

from typing import Protocol, runtime_checkable

import numpy as np

from unida.common.errors import ShapeError
from unida.core.rng import RngStream
from unida.core.trajectory import Trajectory
from unida.denoise.noise_schedule import NoiseSchedule

DEFAULT_NOISE_CLIP = 6.0
WIDE_RANGE_NOISE_CLIP = 15.0


@runtime_checkable
class Denoiser(Protocol):
    """Per-frame noise predictor with exact vector-Jacobian products.

    `predict_eps(x, t)` maps noisy states `[..., K, D]` at grid steps `t` (length K) to noise
    predictions of the same shape. `vjp(x, t, cot)` returns the gradient of
    `<cot, predict_eps(x, t)>` with respect to `x`. When `is_causal`, output frame k depends
    only on input frames <= k.
    """

    is_causal: bool
    K: int
    D: int
    schedule: NoiseSchedule

    def predict_eps(self, x: np.ndarray, t: np.ndarray) -> np.ndarray: ...

    def vjp(self, x: np.ndarray, t: np.ndarray, cotangent: np.ndarray) -> np.ndarray: ...


class AffineMapDenoiser:
    """Shared machinery for denoisers of the form eps = A_t x + b_t."""

    is_causal: bool
    K: int
    D: int
    schedule: NoiseSchedule

    def affine_map(self, t: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        raise NotImplementedError

    def _check(self, x: np.ndarray, t) -> tuple[np.ndarray, np.ndarray]:
        x = np.asarray(x, dtype=np.float64)
        t = np.asarray(t, dtype=np.int64)
        if x.shape[-2:] != (self.K, self.D):
            raise ShapeError(f"Expected states [..., {self.K}, {self.D}], got {x.shape}")
        if t.shape != (self.K,):
            raise ShapeError(f"Expected {self.K} frame steps, got shape {t.shape}")
        return x, t

    def predict_eps(self, x: np.ndarray, t) -> np.ndarray:
        x, t = self._check(x, t)
        A, b = self.affine_map(t)
        flat = x.reshape(*x.shape[:-2], self.K * self.D)
        return (flat @ A.T + b).reshape(x.shape)

    def vjp(self, x: np.ndarray, t, cotangent: np.ndarray) -> np.ndarray:
        x, t = self._check(x, t)
        A, _ = self.affine_map(t)
        cot = np.asarray(cotangent, dtype=np.float64)
        return (cot.reshape(*cot.shape[:-2], self.K * self.D) @ A).reshape(cot.shape)


def frame_coefficients(sched: NoiseSchedule, t) -> tuple[np.ndarray, np.ndarray]:
    """sqrt(alpha_bar) and sqrt(1 - alpha_bar) shaped `[..., K, 1]` for broadcasting."""
    a, s = sched.signal_noise(t)
    return a[..., np.newaxis], s[..., np.newaxis]


def corrupt_states(
    x0: np.ndarray, t, sched: NoiseSchedule, eps: np.ndarray
) -> np.ndarray:
    """x_k^(t_k) = sqrt(alpha_bar) x_k + sqrt(1 - alpha_bar) eps_k for states `[..., K, D]`.

    `t` may be `[K]` or batched `[..., K]`.
    """
    a, s = frame_coefficients(sched, t)
    return a * x0 + s * eps


def corrupt(
    traj: Trajectory,
    t,
    sched: NoiseSchedule,
    rng: RngStream,
    noise_clip: float = DEFAULT_NOISE_CLIP,
) -> tuple[np.ndarray, np.ndarray]:
    """Corrupt each frame of `traj` to its own step t_k.

    Args:
        traj (Trajectory): clean trajectory.
        t: grid steps, one per frame.
        sched (NoiseSchedule): schedule.
        rng (RngStream): noise stream.
        noise_clip (float): clip standard normal noise to +-noise_clip.

    Returns:
        Tuple `(noisy, eps)`, both `[K, C, H, W]`.
    """
    t = np.asarray(t, dtype=np.int64)
    if t.shape != (traj.K,):
        raise ShapeError(f"Expected {traj.K} frame steps, got shape {t.shape}")
    eps = np.clip(rng.standard_normal(traj.frames.shape), -noise_clip, noise_clip)
    noisy = corrupt_states(traj.states, t, sched, eps.reshape(traj.K, -1))
    return noisy.reshape(traj.frames.shape), eps


def tweedie(noisy: np.ndarray, t, eps_pred: np.ndarray, sched: NoiseSchedule) -> np.ndarray:
    """x0_hat = (x^(t) - sqrt(1 - alpha_bar) eps_hat) / sqrt(alpha_bar), per frame.

    Accepts states `[..., K, D]` or frames `[K, C, H, W]`.
    """
    noisy = np.asarray(noisy, dtype=np.float64)
    eps_pred = np.asarray(eps_pred, dtype=np.float64)
    t = np.asarray(t, dtype=np.int64)
    a, s = sched.signal_noise(t)
    frames_layout = noisy.ndim == 4 and t.ndim == 1 and noisy.shape[0] == t.shape[0]
    trailing = 3 if frames_layout else 1
    shape = a.shape + (1,) * trailing
    return (noisy - s.reshape(shape) * eps_pred) / a.reshape(shape)

from unida.denoise.affine import AffineDenoiser, load_affine, save_affine
from unida.denoise.base import Denoiser, corrupt, corrupt_states, tweedie
from unida.denoise.gaussian import GaussianDenoiser, gaussian_denoiser
from unida.denoise.noise_schedule import NoiseSchedule
from unida.denoise.training import (
    TrainingConfig,
    denoising_loss,
    gaussian_risk,
    train_denoiser,
)

__all__ = [
    "AffineDenoiser",
    "Denoiser",
    "GaussianDenoiser",
    "NoiseSchedule",
    "TrainingConfig",
    "corrupt",
    "corrupt_states",
    "denoising_loss",
    "gaussian_denoiser",
    "gaussian_risk",
    "load_affine",
    "save_affine",
    "train_denoiser",
]

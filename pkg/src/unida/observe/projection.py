"""Whitened principal-component bases for low-dimensional latent assimilation."""

__all__ = ["PcaBasis"]

import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Self

import numpy as np

from unida.common.errors import ShapeError, ValidationError
from unida.core.container import read_tensor, write_tensor
from unida.observe.observations import ObservationSet
from unida.observe.operators import LinearMatrix

logger = logging.getLogger(__name__)

MAX_RANK = 64


@dataclass(frozen=True, eq=False)
class PcaBasis:
    """x = mean + U diag(scale) z, with z approximately standard normal on the fit data.

    Attributes:
        mean (np.ndarray): `[D]` data mean.
        components (np.ndarray): `[D, r]` orthonormal principal directions U.
        scale (np.ndarray): `[r]` per-component standard deviations.
    """

    mean: np.ndarray
    components: np.ndarray
    scale: np.ndarray

    @classmethod
    def fit(cls, states: np.ndarray, rank: int) -> Self:
        """Fit on `[n, D]` flattened frames."""
        states = np.asarray(states, dtype=np.float64)
        if states.ndim != 2:
            raise ShapeError(f"Expected [n, D] states, got {states.shape}")
        if not 1 <= rank <= min(MAX_RANK, *states.shape):
            raise ValidationError(
                f"rank must be in [1, {min(MAX_RANK, *states.shape)}], got {rank}"
            )
        mean = states.mean(axis=0)
        _, sing, vt = np.linalg.svd(states - mean, full_matrices=False)
        scale = sing[:rank] / np.sqrt(max(states.shape[0] - 1, 1))
        if np.any(scale <= 0):
            raise ValidationError(f"Data has fewer than {rank} informative directions")
        explained = float(np.sum(sing[:rank] ** 2) / np.sum(sing**2))
        logger.info(f"Fitted PCA basis: rank={rank}, explained variance={explained:.4f}")
        return cls(mean=mean, components=vt[:rank].T.copy(), scale=scale)

    @property
    def rank(self) -> int:
        return self.scale.shape[0]

    @property
    def state_dim(self) -> int:
        return self.mean.shape[0]

    def encode(self, states: np.ndarray) -> np.ndarray:
        return ((np.asarray(states) - self.mean) @ self.components) / self.scale

    def decode(self, latents: np.ndarray) -> np.ndarray:
        return self.mean + (np.asarray(latents) * self.scale) @ self.components.T

    def project(self, obs: ObservationSet) -> ObservationSet:
        """Rewrite observations of full frames as observations of latent states.

        y - H mean = (H U diag(scale)) z + noise.
        """
        H = obs.operator.matrix()
        if H.shape[1] != self.state_dim:
            raise ShapeError(
                f"Operator acts on dim {H.shape[1]}, basis on dim {self.state_dim}"
            )
        latent_op = LinearMatrix((H @ self.components) * self.scale)
        return ObservationSet(
            values=obs.values - H @ self.mean,
            frame_indices=obs.frame_indices,
            operator=latent_op,
            sigma_y=obs.sigma_y,
        )

    def save(self, directory: str | Path) -> None:
        directory = Path(directory)
        write_tensor(directory / "pca_mean.fdt", self.mean)
        write_tensor(directory / "pca_components.fdt", self.components)
        write_tensor(directory / "pca_scale.fdt", self.scale)

    @classmethod
    def load(cls, directory: str | Path) -> Self:
        directory = Path(directory)
        return cls(
            mean=read_tensor(directory / "pca_mean.fdt"),
            components=read_tensor(directory / "pca_components.fdt"),
            scale=read_tensor(directory / "pca_scale.fdt"),
        )

    @classmethod
    def exists(cls, directory: str | Path) -> bool:
        return (Path(directory) / "pca_mean.fdt").exists()

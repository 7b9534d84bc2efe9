"""Dense Gaussian priors over stacked trajectories."""

__all__ = ["GaussianTrajectoryPrior", "condition_gaussian"]

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from unida.common.errors import NumericalError, ShapeError, ValidationError
from unida.core.rng import RngStream

PSD_TOLERANCE = 1e-9


def condition_gaussian(
    mean: np.ndarray, cov: np.ndarray, G: np.ndarray, noise_cov: np.ndarray, y: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """Posterior of x ~ N(mean, cov) given y = G x + e, e ~ N(0, noise_cov).

    Returns:
        Tuple of posterior mean and covariance.
    """
    S = G @ cov @ G.T + noise_cov
    cross = cov @ G.T
    try:
        gain = scipy.linalg.solve(S, cross.T, assume_a="sym").T
    except (np.linalg.LinAlgError, ValueError) as e:
        raise NumericalError(f"Singular innovation covariance in Gaussian conditioning: {e}")
    post_mean = mean + gain @ (y - G @ mean)
    post_cov = cov - gain @ cross.T
    return post_mean, 0.5 * (post_cov + post_cov.T)


@dataclass(frozen=True, eq=False)
class GaussianTrajectoryPrior:
    """N(mean, cov) over a stacked trajectory of K frames with D components each.

    Attributes:
        mean (np.ndarray): `[K*D]` stacked mean, frame-major.
        cov (np.ndarray): `[K*D, K*D]` symmetric PSD covariance.
        K (int): number of frames.
    """

    mean: np.ndarray
    cov: np.ndarray
    K: int

    def __post_init__(self):
        mean = np.asarray(self.mean, dtype=np.float64).ravel()
        cov = np.asarray(self.cov, dtype=np.float64)
        n = mean.shape[0]
        if cov.shape != (n, n):
            raise ShapeError(f"Covariance shape {cov.shape} does not match mean length {n}")
        if self.K < 1 or n % self.K:
            raise ShapeError(f"Mean length {n} is not a multiple of K={self.K}")
        if not np.allclose(cov, cov.T, atol=1e-12, rtol=1e-10):
            raise ValidationError("Prior covariance is not symmetric")
        cov = 0.5 * (cov + cov.T)
        min_eig = float(np.linalg.eigvalsh(cov).min()) if n else 0.0
        if min_eig < -PSD_TOLERANCE * max(1.0, float(np.abs(cov).max(initial=0.0))):
            raise ValidationError(f"Prior covariance is not PSD (min eigenvalue {min_eig:.3e})")
        for arr in (mean, cov):
            arr.setflags(write=False)
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "cov", cov)

    @property
    def D(self) -> int:
        return self.mean.shape[0] // self.K

    @property
    def dim(self) -> int:
        return self.mean.shape[0]

    def frame_mean(self, k: int) -> np.ndarray:
        return self.mean[k * self.D : (k + 1) * self.D]

    def frame_block(self, j: int, k: int) -> np.ndarray:
        """Cov(x_j, x_k)."""
        D = self.D
        return self.cov[j * D : (j + 1) * D, k * D : (k + 1) * D]

    def sample(self, n: int, rng: RngStream) -> np.ndarray:
        """Draw `n` trajectories as a `[n, K, D]` array."""
        # eigh tolerates singular covariances
        vals, vecs = np.linalg.eigh(self.cov)
        root = vecs * np.sqrt(np.clip(vals, 0.0, None))
        z = rng.standard_normal((n, self.dim))
        return (self.mean + z @ root.T).reshape(n, self.K, self.D)

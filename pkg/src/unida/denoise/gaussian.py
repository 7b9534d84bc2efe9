"""Exact denoisers for Gaussian trajectory priors.

For a prior N(mu, Sigma) and per-frame coefficients D_t = blockdiag(sqrt(alpha_bar) I),
N_t = blockdiag((1 - alpha_bar) I):

    E[x | x^(t)] = mu + Sigma D_t (D_t Sigma D_t + N_t)^{-1} (x^(t) - D_t mu)

The causal variant conditions frame k on noisy frames 0..k only, which makes the map block
lower triangular. Both are affine in x^(t); the noise prediction follows from the Tweedie
relation and frames at step 0 predict zero noise.
"""

__all__ = ["GaussianDenoiser", "gaussian_denoiser"]

import logging
import threading
from collections import OrderedDict

import numpy as np
import scipy.linalg

from unida.core.gaussian import GaussianTrajectoryPrior
from unida.denoise.base import AffineMapDenoiser
from unida.denoise.noise_schedule import NoiseSchedule

logger = logging.getLogger(__name__)


class GaussianDenoiser(AffineMapDenoiser):
    """Bayes-optimal noise predictor under a Gaussian trajectory prior.

    Args:
        prior (GaussianTrajectoryPrior): the prior over `[K, D]` trajectories.
        schedule (NoiseSchedule): noise schedule (grid steps).
        causal (bool): condition each frame only on its past and present.
        cache_size (int): number of step patterns whose affine maps are memoized.
    """

    def __init__(
        self,
        prior: GaussianTrajectoryPrior,
        schedule: NoiseSchedule,
        causal: bool = True,
        cache_size: int = 512,
    ):
        self.prior = prior
        self.schedule = schedule
        self.is_causal = bool(causal)
        self.K = prior.K
        self.D = prior.D
        self._cache: OrderedDict[tuple[int, ...], tuple[np.ndarray, np.ndarray]] = OrderedDict()
        self._cache_size = cache_size
        self._lock = threading.Lock()

    def posterior_gain(self, t: np.ndarray) -> np.ndarray:
        """G with E[x | x^(t)] = mu + G (x^(t) - D_t mu); block lower triangular when causal."""
        a, s = self.schedule.signal_noise(np.asarray(t, dtype=np.int64))
        a = np.repeat(a, self.D)
        noise_var = np.repeat(s**2, self.D)
        Sigma = self.prior.cov
        S = a[:, None] * Sigma * a[None, :] + np.diag(noise_var)
        cross = Sigma * a[None, :]
        if not self.is_causal:
            return _solve_right(S, cross)
        n, D = self.K * self.D, self.D
        G = np.zeros((n, n))
        try:
            chol = scipy.linalg.cholesky(S, lower=True)
        except np.linalg.LinAlgError:
            chol = None
        for k in range(self.K):
            m = (k + 1) * D
            rows = slice(k * D, m)
            if chol is not None:
                G[rows, :m] = scipy.linalg.cho_solve((chol[:m, :m], True), cross[rows, :m].T).T
            else:
                G[rows, :m] = _solve_right(S[:m, :m], cross[rows, :m])
        return G

    def affine_map(self, t) -> tuple[np.ndarray, np.ndarray]:
        """(A_t, b_t) with predict_eps(x) = A_t x + b_t on stacked states."""
        t = np.asarray(t, dtype=np.int64)
        key = tuple(int(v) for v in t)
        with self._lock:
            cached = self._cache.get(key)
            if cached is not None:
                self._cache.move_to_end(key)
                return cached
        n = self.K * self.D
        a, s = self.schedule.signal_noise(t)
        a = np.repeat(a, self.D)
        s = np.repeat(s, self.D)
        inv_s = np.divide(1.0, s, out=np.zeros_like(s), where=s > 0)
        if not np.any(s > 0):
            A, b = np.zeros((n, n)), np.zeros(n)
        else:
            G = self.posterior_gain(t)
            mu = self.prior.mean
            # eps = (x - a * x0_hat) / s with x0_hat = mu + G (x - a mu)
            A = inv_s[:, None] * (np.eye(n) - a[:, None] * G)
            b = -inv_s * a * (mu - G @ (a * mu))
        A.setflags(write=False)
        b.setflags(write=False)
        with self._lock:
            self._cache[key] = (A, b)
            self._cache.move_to_end(key)
            while len(self._cache) > self._cache_size:
                self._cache.popitem(last=False)
        return A, b

    def posterior_mean(self, x: np.ndarray, t) -> np.ndarray:
        """E[x_0 | x^(t)] for states `[..., K, D]`."""
        x, t = self._check(x, t)
        a, _ = self.schedule.signal_noise(t)
        a = np.repeat(a, self.D)
        G = self.posterior_gain(t)
        mu = self.prior.mean
        flat = x.reshape(*x.shape[:-2], self.K * self.D)
        return (mu + (flat - a * mu) @ G.T).reshape(x.shape)


def _solve_right(S: np.ndarray, B: np.ndarray) -> np.ndarray:
    """B S^{-1} for symmetric S, falling back to the pseudo-inverse when S is singular."""
    try:
        return scipy.linalg.solve(S, B.T, assume_a="pos").T
    except (np.linalg.LinAlgError, ValueError):
        logger.debug("Singular conditioning matrix; using pseudo-inverse")
        return B @ scipy.linalg.pinvh(S)


def gaussian_denoiser(
    prior: GaussianTrajectoryPrior, schedule: NoiseSchedule, causal: bool = True
) -> GaussianDenoiser:
    """Build the exact conditional-expectation denoiser for `prior`."""
    return GaussianDenoiser(prior, schedule, causal=causal)

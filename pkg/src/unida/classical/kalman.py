"""Exact Kalman filtering and Rauch-Tung-Striebel smoothing for linear-Gaussian systems.

Frame 0 carries the initial law N(mu0, P0); observations may be missing for any frame.
"""

__all__ = ["GaussianMarginals", "kalman_filter", "rts_smoother", "observations_by_frame"]

import logging
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from unida.common.errors import NumericalError, ShapeError
from unida.core.trajectory import Trajectory
from unida.dynamics.linear import LinearSSM
from unida.observe.observations import ObservationSet

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class GaussianMarginals:
    """Per-frame Gaussian marginals.

    Attributes:
        means (np.ndarray): `[K, D]`.
        covs (np.ndarray): `[K, D, D]`.
        pred_means (np.ndarray | None): one-step forecast means `[K, D]` (filter only).
        pred_covs (np.ndarray | None): one-step forecast covariances `[K, D, D]` (filter only).
    """

    means: np.ndarray
    covs: np.ndarray
    pred_means: np.ndarray | None = None
    pred_covs: np.ndarray | None = None

    @property
    def K(self) -> int:
        return self.means.shape[0]

    def trajectory(self) -> Trajectory:
        return Trajectory.from_states(self.means)

    def std(self) -> np.ndarray:
        return np.sqrt(np.clip(np.diagonal(self.covs, axis1=1, axis2=2), 0.0, None))


def observations_by_frame(obs, K: int | None, M: int) -> tuple[int, dict[int, np.ndarray]]:
    """Normalize observations to `{frame: y}`.

    `obs` is an `ObservationSet` or a `[K, M]` array whose all-NaN rows mark missing frames.
    """
    if isinstance(obs, ObservationSet):
        mapping = obs.by_frame()
        if K is None:
            K = obs.frame_indices[-1] + 1 if obs.frame_indices else 0
    else:
        values = np.atleast_2d(np.asarray(obs, dtype=np.float64))
        if K is not None and values.shape[0] != K:
            raise ShapeError(f"Observation array has {values.shape[0]} rows, expected K={K}")
        K = values.shape[0]
        mapping = {k: y for k, y in enumerate(values) if not np.all(np.isnan(y))}
    for k, y in mapping.items():
        if y.shape != (M,):
            raise ShapeError(f"Observation of frame {k} has shape {y.shape}, expected ({M},)")
        if k >= K:
            raise ShapeError(f"Observation of frame {k} beyond K={K}")
    if K < 1:
        raise ShapeError("At least one frame is required")
    return K, mapping


def kalman_filter(ssm: LinearSSM, obs, K: int | None = None) -> GaussianMarginals:
    """Filtering marginals p(x_k | y_{0:k}).

    Args:
        ssm (LinearSSM): the system (its H and R define the likelihood).
        obs: `ObservationSet` or `[K, M]` array (all-NaN rows are unobserved).
        K (int | None): number of frames; inferred from `obs` when None.

    Raises:
        NumericalError: when an innovation covariance is singular.
    """
    K, by_frame = observations_by_frame(obs, K, ssm.M)
    D = ssm.D
    means, covs = np.empty((K, D)), np.empty((K, D, D))
    pred_means, pred_covs = np.empty((K, D)), np.empty((K, D, D))
    m, P = ssm.mu0.copy(), ssm.P0.copy()
    eye = np.eye(D)
    for k in range(K):
        if k > 0:
            m = ssm.A @ m
            P = ssm.A @ P @ ssm.A.T + ssm.Q
        pred_means[k], pred_covs[k] = m, P
        y = by_frame.get(k)
        if y is not None:
            S = ssm.H @ P @ ssm.H.T + ssm.R
            try:
                gain = scipy.linalg.solve(S, ssm.H @ P, assume_a="pos").T
            except (np.linalg.LinAlgError, ValueError) as e:
                raise NumericalError(f"Singular innovation covariance: {e}", frame=k)
            m = m + gain @ (y - ssm.H @ m)
            # Joseph form keeps P symmetric PSD
            IKH = eye - gain @ ssm.H
            P = IKH @ P @ IKH.T + gain @ ssm.R @ gain.T
        P = 0.5 * (P + P.T)
        means[k], covs[k] = m, P
    logger.debug(f"Kalman filter over {K} frames, {len(by_frame)} observed")
    return GaussianMarginals(means, covs, pred_means, pred_covs)


def rts_smoother(ssm: LinearSSM, obs, K: int | None = None) -> GaussianMarginals:
    """Smoothing marginals p(x_k | y_{0:K-1}) by a backward pass over the filter."""
    filt = kalman_filter(ssm, obs, K)
    assert filt.pred_means is not None and filt.pred_covs is not None
    K = filt.K
    means, covs = filt.means.copy(), filt.covs.copy()
    for k in range(K - 2, -1, -1):
        P_pred = filt.pred_covs[k + 1]
        cross = ssm.A @ filt.covs[k]
        try:
            J = scipy.linalg.solve(P_pred, cross, assume_a="pos").T
        except (np.linalg.LinAlgError, ValueError):
            J = cross.T @ scipy.linalg.pinvh(P_pred)
        means[k] = filt.means[k] + J @ (means[k + 1] - filt.pred_means[k + 1])
        P = filt.covs[k] + J @ (covs[k + 1] - P_pred) @ J.T
        covs[k] = 0.5 * (P + P.T)
    return GaussianMarginals(means, covs)

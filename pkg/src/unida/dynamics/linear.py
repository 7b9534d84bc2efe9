"""Linear-Gaussian state-space model: the exactness oracle.

    x_1 ~ N(mu0, P0),  x_{k+1} = A x_k + xi_k,  xi_k ~ N(0, Q)
    y_k = H x_k + eta_k,  eta_k ~ N(0, R)
"""

__all__ = ["LinearSSM", "ssm_simulate", "ssm_trajectory_prior", "MAX_PRIOR_DIM"]

import logging
from dataclasses import dataclass
from functools import cached_property

import numpy as np
import scipy.linalg

from unida.common.errors import CapacityError, ShapeError, ValidationError
from unida.core.gaussian import GaussianTrajectoryPrior
from unida.core.rng import RngStream

logger = logging.getLogger(__name__)

MAX_PRIOR_DIM = 4096
_PSD_TOL = 1e-10


def _psd_root(matrix: np.ndarray) -> np.ndarray:
    vals, vecs = np.linalg.eigh(matrix)
    return vecs * np.sqrt(np.clip(vals, 0.0, None))


def _check_covariance(name: str, matrix: np.ndarray, dim: int, definite: bool = False):
    if matrix.shape != (dim, dim):
        raise ShapeError(f"{name} must be {dim}x{dim}, got {matrix.shape}")
    if not np.allclose(matrix, matrix.T, atol=1e-12):
        raise ValidationError(f"{name} must be symmetric")
    min_eig = float(np.linalg.eigvalsh(matrix).min())
    scale = max(1.0, float(np.abs(matrix).max()))
    if definite and min_eig <= 0:
        raise ValidationError(f"{name} must be positive definite (min eigenvalue {min_eig:.3e})")
    if min_eig < -_PSD_TOL * scale:
        raise ValidationError(f"{name} must be PSD (min eigenvalue {min_eig:.3e})")


@dataclass(frozen=True, eq=False)
class LinearSSM:
    """Linear-Gaussian system (A, Q, H, R, mu0, P0).

    Attributes:
        A (np.ndarray): D x D transition.
        Q (np.ndarray): D x D process covariance (PSD).
        H (np.ndarray): M x D observation matrix.
        R (np.ndarray): M x M observation covariance (PD).
        mu0 (np.ndarray): initial mean, length D.
        P0 (np.ndarray): D x D initial covariance (PSD).
    """

    A: np.ndarray
    Q: np.ndarray
    H: np.ndarray
    R: np.ndarray
    mu0: np.ndarray
    P0: np.ndarray

    def __post_init__(self):
        values = {
            name: np.array(getattr(self, name), dtype=np.float64)
            for name in ("A", "Q", "H", "R", "mu0", "P0")
        }
        values["mu0"] = values["mu0"].ravel()
        A, H = values["A"], np.atleast_2d(values["H"])
        values["H"] = H
        D = values["mu0"].shape[0]
        if A.shape != (D, D):
            raise ShapeError(f"A must be {D}x{D}, got {A.shape}")
        if H.shape[1] != D:
            raise ShapeError(f"H must have {D} columns, got {H.shape}")
        _check_covariance("Q", values["Q"], D)
        _check_covariance("P0", values["P0"], D)
        _check_covariance("R", np.atleast_2d(values["R"]), H.shape[0], definite=True)
        values["R"] = np.atleast_2d(values["R"])
        for name, arr in values.items():
            if not np.all(np.isfinite(arr)):
                raise ValidationError(f"{name} contains non-finite values")
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def D(self) -> int:
        return self.mu0.shape[0]

    @property
    def M(self) -> int:
        return self.H.shape[0]

    @cached_property
    def spectral_radius(self) -> float:
        return float(np.abs(np.linalg.eigvals(self.A)).max())

    @cached_property
    def Q_root(self) -> np.ndarray:
        return _psd_root(self.Q)

    @cached_property
    def R_root(self) -> np.ndarray:
        return _psd_root(self.R)

    @cached_property
    def P0_root(self) -> np.ndarray:
        return _psd_root(self.P0)

    def stationary_covariance(self) -> np.ndarray:
        """Solve P = A P A^T + Q (requires spectral radius < 1)."""
        if self.spectral_radius >= 1:
            raise ValidationError(
                f"No stationary covariance for spectral radius {self.spectral_radius:.4f}"
            )
        return scipy.linalg.solve_discrete_lyapunov(self.A, self.Q)

    def propagate(self, states: np.ndarray, rng: RngStream) -> np.ndarray:
        """One transition for a batch `[..., D]` of states, with process noise."""
        noise = rng.standard_normal(states.shape) @ self.Q_root.T
        return states @ self.A.T + noise


def ssm_simulate(ssm: LinearSSM, K: int, rng: RngStream) -> tuple[np.ndarray, np.ndarray]:
    """Simulate K frames of states and observations.

    Args:
        ssm (LinearSSM): the system.
        K (int): number of frames (>= 1).
        rng (RngStream): random stream.

    Returns:
        Tuple of `states [K, D]` and `obs [K, M]`.
    """
    if K < 1:
        raise ShapeError(f"K must be >= 1, got {K}")
    states = np.empty((K, ssm.D))
    states[0] = ssm.mu0 + ssm.P0_root @ rng.standard_normal(ssm.D)
    for k in range(1, K):
        states[k] = ssm.A @ states[k - 1] + ssm.Q_root @ rng.standard_normal(ssm.D)
    obs = states @ ssm.H.T + rng.standard_normal((K, ssm.M)) @ ssm.R_root.T
    return states, obs


def ssm_trajectory_prior(
    ssm: LinearSSM, K: int, max_dim: int = MAX_PRIOR_DIM
) -> GaussianTrajectoryPrior:
    """Exact Gaussian law of the stacked state trajectory x_{1:K}.

    Cov(x_j, x_k) = A^{j-k} P_k for j >= k, with P_1 = P0 and P_{k+1} = A P_k A^T + Q.

    Raises:
        CapacityError: if K*D exceeds `max_dim`.
    """
    D = ssm.D
    n = K * D
    if n > max_dim:
        raise CapacityError(
            f"Dense trajectory prior of dimension K*D={n} exceeds the limit {max_dim}"
        )
    means = np.empty((K, D))
    marginals = np.empty((K, D, D))
    means[0], marginals[0] = ssm.mu0, ssm.P0
    for k in range(1, K):
        means[k] = ssm.A @ means[k - 1]
        marginals[k] = ssm.A @ marginals[k - 1] @ ssm.A.T + ssm.Q
    cov = np.zeros((n, n))
    for k in range(K):
        block = marginals[k]
        for j in range(k, K):
            cov[j * D : (j + 1) * D, k * D : (k + 1) * D] = block
            cov[k * D : (k + 1) * D, j * D : (j + 1) * D] = block.T
            block = ssm.A @ block
    logger.debug(f"Built trajectory prior: K={K}, D={D}")
    return GaussianTrajectoryPrior(mean=means.ravel(), cov=cov, K=K)

"""Stochastic ensemble Kalman filter and augmented-state ensemble Kalman smoother.

Each cycle propagates the members one frame and applies multiplicative prior inflation to the
forecast, observed or not; observed frames then assimilate with mean-centered perturbed
observations. Gains are assembled from ensemble anomalies, never from a full state covariance.
The smoother stacks the most recent `lag + 1` frames into one augmented state whose observation
operator reads the newest block only; lag 0 reproduces the filter exactly.
"""

__all__ = [
    "Ensemble",
    "EnsembleRun",
    "Propagator",
    "enkf_run",
    "enks_run",
    "free_run",
    "ssm_propagator",
    "ns_propagator",
    "MAX_ANALYSIS_ELEMENTS",
]

import logging
from collections import deque
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
import scipy.linalg

from unida.classical.localization import (
    LocalizationConfig,
    gc_taper_matrix,
    observation_coords,
    state_coords,
)
from unida.common.errors import CapacityError, NumericalError, ShapeError, ValidationError
from unida.core.rng import RngStream
from unida.dynamics.linear import LinearSSM
from unida.dynamics.navier_stokes import NsConfig, ns_propagate
from unida.observe.normalization import Normalization
from unida.observe.observations import ObservationSet

logger = logging.getLogger(__name__)

# members x augmented state, and augmented state x observations
MAX_ANALYSIS_ELEMENTS = 2**28
COLLAPSE_SPREAD = 1e-12

Propagator = Callable[[np.ndarray, RngStream], np.ndarray]


@dataclass(frozen=True, eq=False)
class Ensemble:
    """`N_e` member states of dimension n."""

    members: np.ndarray

    def __post_init__(self):
        members = np.asarray(self.members, dtype=np.float64)
        if members.ndim != 2 or members.shape[0] < 2:
            raise ShapeError(f"Ensembles are [N_e >= 2, n], got {members.shape}")
        if not np.all(np.isfinite(members)):
            raise ValidationError("Ensemble members must be finite")
        object.__setattr__(self, "members", members)

    @property
    def N_e(self) -> int:
        return self.members.shape[0]

    @property
    def n(self) -> int:
        return self.members.shape[1]

    @property
    def mean(self) -> np.ndarray:
        return self.members.mean(axis=0)

    @property
    def anomalies(self) -> np.ndarray:
        return self.members - self.mean

    @property
    def spread(self) -> float:
        """Root of the mean sample variance over state entries."""
        return float(np.sqrt(np.mean(self.members.var(axis=0, ddof=1))))

    def inflate(self, factor: float) -> "Ensemble":
        mean = self.mean
        return Ensemble(mean + factor * (self.members - mean))


@dataclass
class EnsembleRun:
    """Result of an ensemble cycle.

    Attributes:
        means (np.ndarray): `[K, n]` estimates (smoothed for EnKS, analysis for EnKF).
        filter_means (np.ndarray): `[K, n]` analysis means at assimilation time.
        spread (list[float]): analysis spread per frame.
        gain_norms (list[float]): Frobenius norm of the gain per frame (0 when unobserved).
        warnings (list[str]): ensemble collapse and similar events.
        members (np.ndarray | None): `[K, N_e, n]` final members per frame when kept.
    """

    means: np.ndarray
    filter_means: np.ndarray
    spread: list[float] = field(default_factory=list)
    gain_norms: list[float] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)
    members: np.ndarray | None = None

    def diagnostics(self) -> dict:
        return {"spread": self.spread, "gain_norms": self.gain_norms, "warnings": self.warnings}


def ssm_propagator(ssm: LinearSSM) -> Propagator:
    """x -> A x + Q-noise per member."""
    return ssm.propagate


def ns_propagator(
    cfg: NsConfig, n_steps: int | None = None, norm: Normalization | None = None
) -> Propagator:
    """Advance flattened vorticity members by `n_steps` solver steps (default one store interval).

    With `norm`, members live in normalized space and are mapped to physical units around the
    solver call.
    """
    n_steps = cfg.steps_per_store if n_steps is None else n_steps
    N = cfg.N

    def propagate(members: np.ndarray, rng: RngStream) -> np.ndarray:
        fields = members.reshape(-1, N, N)
        if norm is not None:
            fields = norm.denormalize(fields[:, np.newaxis])[:, 0]
        fields = ns_propagate(fields, cfg, n_steps, rng)
        if norm is not None:
            fields = norm.normalize(fields[:, np.newaxis])[:, 0]
        return fields.reshape(members.shape)

    return propagate


def _perturbations(rng: RngStream, N_e: int, R_root: np.ndarray) -> np.ndarray:
    eps = rng.standard_normal((N_e, R_root.shape[0])) @ R_root.T
    return eps - eps.mean(axis=0)


def _analysis(
    augmented: np.ndarray,
    newest: slice,
    y: np.ndarray,
    obs_apply: Callable[[np.ndarray], np.ndarray],
    R: np.ndarray,
    R_root: np.ndarray,
    taper_xy: np.ndarray | None,
    taper_yy: np.ndarray | None,
    rng: RngStream,
    frame: int,
) -> tuple[np.ndarray, float]:
    """Perturbed-observation update of `[N_e, n_aug]` members; returns members and gain norm."""
    N_e = augmented.shape[0]
    scale = 1.0 / np.sqrt(N_e - 1)
    X = (augmented - augmented.mean(axis=0)) * scale
    HX_full = obs_apply(augmented[:, newest])
    HX = (HX_full - HX_full.mean(axis=0)) * scale
    PHt = X.T @ HX
    HPHt = HX.T @ HX
    if taper_xy is not None:
        PHt = PHt * taper_xy
    if taper_yy is not None:
        HPHt = HPHt * taper_yy
    S = HPHt + R
    try:
        gain = scipy.linalg.solve(S, PHt.T, assume_a="pos").T
    except (np.linalg.LinAlgError, ValueError) as e:
        raise NumericalError(f"Singular innovation covariance in ensemble analysis: {e}", frame)
    perturbed = y + _perturbations(rng, N_e, R_root)
    updated = augmented + (perturbed - HX_full) @ gain.T
    return updated, float(np.linalg.norm(gain))


def _cycle(
    propagate: Propagator,
    ens0,
    obs: ObservationSet,
    K: int,
    lag: int,
    loc: LocalizationConfig | None,
    inflation: float,
    rng: RngStream,
    keep_members: bool,
) -> EnsembleRun:
    members = Ensemble(ens0).members
    N_e, n = members.shape
    if lag < 0:
        raise ValidationError(f"Smoother lag must be >= 0, got {lag}")
    if inflation < 1.0:
        raise ValidationError(f"Inflation must be >= 1, got {inflation}")
    op = obs.operator
    if op.state_dim != n:
        raise ShapeError(f"Operator acts on dim {op.state_dim}, members have n={n}")
    blocks = lag + 1
    n_aug = n * blocks
    if max(N_e * n_aug, n_aug * op.output_dim) > MAX_ANALYSIS_ELEMENTS:
        raise CapacityError(
            f"Augmented analysis of {blocks} frames x n={n} with M={op.output_dim} exceeds "
            f"{MAX_ANALYSIS_ELEMENTS} elements; reduce the lag"
        )
    R = obs.sigma_y**2 * np.eye(op.output_dim)
    R_root = obs.sigma_y * np.eye(op.output_dim)
    taper_xy = taper_yy = None
    if loc is not None:
        grid = op.frame_shape[1:]
        xy, yy = state_coords(op.frame_shape), observation_coords(op)
        taper_xy = np.tile(gc_taper_matrix(xy, yy, loc, grid), (blocks, 1))
        taper_yy = gc_taper_matrix(yy, yy, loc, grid)
    by_frame = obs.by_frame()
    prop_rng, obs_rng = rng.spawn(0), rng.spawn(1)

    result = EnsembleRun(means=np.empty((K, n)), filter_means=np.empty((K, n)))
    kept = np.empty((K, N_e, n)) if keep_members else None
    buffer: deque[tuple[int, np.ndarray]] = deque()

    def finalize(frame: int, block: np.ndarray):
        result.means[frame] = block.mean(axis=0)
        if kept is not None:
            kept[frame] = block

    for k in range(K):
        if k > 0:
            members = propagate(members, prop_rng.spawn(k))
            if not np.all(np.isfinite(members)):
                raise NumericalError("Ensemble forecast became non-finite", frame=k)
        gain_norm = 0.0
        y = by_frame.get(k)
        # every forecast is inflated, observed or not
        if k > 0 or y is not None:
            members = Ensemble(members).inflate(inflation).members
        if y is not None:
            stacked = [block for _, block in buffer] + [members]
            augmented = np.concatenate(stacked, axis=1)
            newest = slice((len(stacked) - 1) * n, len(stacked) * n)
            xy = None if taper_xy is None else taper_xy[: augmented.shape[1]]
            augmented, gain_norm = _analysis(
                augmented, newest, y, op.apply_flat, R, R_root, xy, taper_yy,
                obs_rng.spawn(k), k,
            )
            members = augmented[:, newest]
            buffer = deque(
                (frame, augmented[:, i * n : (i + 1) * n]) for i, (frame, _) in enumerate(buffer)
            )
        result.filter_means[k] = members.mean(axis=0)
        spread = Ensemble(members).spread
        if spread < COLLAPSE_SPREAD:
            result.warnings.append(f"frame {k}: ensemble collapse (spread {spread:.3e})")
            logger.warning(f"Ensemble collapsed at frame {k} (spread {spread:.3e})")
        result.spread.append(spread)
        result.gain_norms.append(gain_norm)
        buffer.append((k, members))
        if len(buffer) > lag:
            finalize(*buffer.popleft())
        logger.debug(f"frame {k}: spread={spread:.4g}, gain norm={gain_norm:.4g}")
    for frame, block in buffer:
        finalize(frame, block)
    result.members = kept
    logger.info(f"Ensemble cycle over {K} frames (N_e={N_e}, lag={lag}) finished")
    return result


def enkf_run(
    propagate: Propagator,
    ens0,
    obs: ObservationSet,
    K: int,
    loc: LocalizationConfig | None = None,
    inflation: float = 1.0,
    rng: RngStream | None = None,
    keep_members: bool = False,
) -> EnsembleRun:
    """Stochastic EnKF over K frames; `ens0` is the `[N_e, n]` ensemble at frame 0.

    Frame 0 is analysed directly when observed; later frames are forecast first.
    """
    return _cycle(propagate, ens0, obs, K, 0, loc, inflation, rng or RngStream(0), keep_members)


def enks_run(
    propagate: Propagator,
    ens0,
    obs: ObservationSet,
    K: int,
    lag: int,
    loc: LocalizationConfig | None = None,
    inflation: float = 1.0,
    rng: RngStream | None = None,
    keep_members: bool = False,
) -> EnsembleRun:
    """Augmented-state EnKS with `lag` trailing frames (lag = K - 1 smooths the full sequence).

    Raises:
        CapacityError: when the augmented analysis exceeds the memory guard.
    """
    return _cycle(
        propagate, ens0, obs, K, lag, loc, inflation, rng or RngStream(0), keep_members
    )


def free_run(
    propagate: Propagator, ens0, K: int, rng: RngStream | None = None, keep_members: bool = False
) -> EnsembleRun:
    """Ensemble forecast without analysis, drawing model noise like the assimilating cycles."""
    rng = rng or RngStream(0)
    members = Ensemble(ens0).members
    N_e, n = members.shape
    prop_rng = rng.spawn(0)
    result = EnsembleRun(means=np.empty((K, n)), filter_means=np.empty((K, n)))
    kept = np.empty((K, N_e, n)) if keep_members else None
    for k in range(K):
        if k > 0:
            members = propagate(members, prop_rng.spawn(k))
        result.means[k] = members.mean(axis=0)
        result.spread.append(Ensemble(members).spread)
        result.gain_norms.append(0.0)
        if kept is not None:
            kept[k] = members
    result.filter_means = result.means.copy()
    result.members = kept
    return result

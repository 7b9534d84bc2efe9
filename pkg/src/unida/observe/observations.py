"""Noisy observation sets."""

__all__ = ["ObservationSet", "observe_trajectory"]

import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Self

import numpy as np

from unida.common.errors import ShapeError, ValidationError
from unida.core.container import read_sidecar, read_tensor, write_sidecar, write_tensor
from unida.core.rng import RngStream
from unida.core.trajectory import Trajectory
from unida.observe.operators import ObsOperator, operator_from_json

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class ObservationSet:
    """Observations y_k = op(x_k) + sigma_y * eps for a subset of frames.

    Attributes:
        values (np.ndarray): `[n_obs, M]` observation vectors.
        frame_indices (tuple[int, ...]): 0-based frame index of each row, strictly increasing.
        operator (ObsOperator): the shared operator.
        sigma_y (float): noise standard deviation in data space.
    """

    values: np.ndarray
    frame_indices: tuple[int, ...]
    operator: ObsOperator
    sigma_y: float

    def __post_init__(self):
        values = np.array(self.values, dtype=np.float64, ndmin=2)
        indices = tuple(int(k) for k in self.frame_indices)
        if values.shape != (len(indices), self.operator.output_dim):
            raise ShapeError(
                f"Observation values {values.shape} do not match "
                f"{len(indices)} frames x M={self.operator.output_dim}"
            )
        if any(b <= a for a, b in zip(indices, indices[1:])) or any(k < 0 for k in indices):
            raise ValidationError(f"frame_indices must be non-negative, increasing: {indices}")
        if not self.sigma_y > 0:
            raise ValidationError(f"sigma_y must be positive, got {self.sigma_y}")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "frame_indices", indices)
        object.__setattr__(self, "sigma_y", float(self.sigma_y))

    @property
    def M(self) -> int:
        return self.operator.output_dim

    def get(self, k: int) -> np.ndarray | None:
        """Observation of frame `k`, or None when the frame is unobserved."""
        try:
            return self.values[self.frame_indices.index(k)]
        except ValueError:
            return None

    def by_frame(self) -> dict[int, np.ndarray]:
        return dict(zip(self.frame_indices, self.values))

    def shifted(self, offset: int, count: int) -> "ObservationSet":
        """Observations of frames `offset .. offset+count-1`, re-indexed from 0."""
        keep = [i for i, k in enumerate(self.frame_indices) if offset <= k < offset + count]
        return ObservationSet(
            values=self.values[keep].reshape(len(keep), self.M),
            frame_indices=tuple(self.frame_indices[i] - offset for i in keep),
            operator=self.operator,
            sigma_y=self.sigma_y,
        )

    def save(self, path: str | Path) -> Path:
        """Write values as FDT1 and operator/noise metadata as a JSON sidecar."""
        path = write_tensor(path, self.values)
        write_sidecar(
            path,
            {
                "operator": self.operator.to_json(),
                "sigma_y": self.sigma_y,
                "frame_indices": list(self.frame_indices),
            },
        )
        return path

    @classmethod
    def load(cls, path: str | Path) -> Self:
        meta = read_sidecar(path)
        return cls(
            values=read_tensor(path),
            frame_indices=tuple(meta["frame_indices"]),
            operator=operator_from_json(meta["operator"]),
            sigma_y=meta["sigma_y"],
        )


def observe_trajectory(
    traj: Trajectory,
    op: ObsOperator,
    sigma_y: float,
    rng: RngStream,
    frame_indices: list[int] | None = None,
) -> ObservationSet:
    """Observe frames of `traj` through `op` with additive Gaussian noise.

    Args:
        traj (Trajectory): truth.
        op (ObsOperator): shared operator (a sparse mask is fixed across frames and channels).
        sigma_y (float): noise standard deviation, > 0.
        rng (RngStream): noise stream.
        frame_indices (list[int] | None): frames to observe; all frames when None.

    Returns:
        ObservationSet: the noisy observations.
    """
    if not sigma_y > 0:
        raise ValidationError(f"sigma_y must be positive, got {sigma_y}")
    indices = list(range(traj.K)) if frame_indices is None else sorted(frame_indices)
    if indices and (indices[0] < 0 or indices[-1] >= traj.K):
        raise ShapeError(f"frame_indices {indices} out of range for K={traj.K}")
    clean = op.apply(traj.frames[indices])
    noisy = clean + sigma_y * rng.standard_normal(clean.shape)
    logger.debug(f"Observed {len(indices)} frames with {op.kind} (M={op.output_dim})")
    return ObservationSet(noisy, tuple(indices), op, sigma_y)

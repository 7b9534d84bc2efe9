"""Linear observation operators acting on `[C, H, W]` frames.

Every operator works on frames, on flattened states (`apply_flat`) and has an exact adjoint.
"""

__all__ = [
    "ObsOperator",
    "SparseMask",
    "Downsample",
    "LinearMatrix",
    "SparseMaskSpec",
    "DownsampleSpec",
    "LinearMatrixSpec",
    "OperatorSpec",
    "operator_from_json",
    "apply_operator",
]

from abc import ABC, abstractmethod
from functools import cached_property
from typing import Annotated, Any, ClassVar, Literal

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from unida.common.errors import ShapeError, ValidationError
from unida.core.resample import bilinear_matrix
from unida.core.rng import RngStream

# stream id reserved for mask placement
MASK_STREAM_ID = 0x4D41534B

FrameShape = tuple[int, int, int]


class ObsOperator(ABC):
    """Linear map from a frame of shape `frame_shape` to a vector of length `output_dim`."""

    kind: ClassVar[str]

    def __init__(self, frame_shape: FrameShape):
        if len(frame_shape) != 3 or min(frame_shape) < 1:
            raise ShapeError(f"frame_shape must be (C, H, W) with positive extents: {frame_shape}")
        self.frame_shape: FrameShape = tuple(int(n) for n in frame_shape)  # type: ignore

    @property
    def state_dim(self) -> int:
        C, H, W = self.frame_shape
        return C * H * W

    @property
    @abstractmethod
    def output_dim(self) -> int:
        raise NotImplementedError

    @abstractmethod
    def apply_flat(self, x: np.ndarray) -> np.ndarray:
        """Apply to flattened states `[..., D]`."""
        raise NotImplementedError

    @abstractmethod
    def adjoint_flat(self, r: np.ndarray) -> np.ndarray:
        """Adjoint applied to `[..., M]`, returning `[..., D]`."""
        raise NotImplementedError

    @abstractmethod
    def to_json(self) -> dict[str, Any]:
        raise NotImplementedError

    def apply(self, frames: np.ndarray) -> np.ndarray:
        """Apply to frames `[..., C, H, W]`."""
        frames = np.asarray(frames, dtype=np.float64)
        if frames.shape[-3:] != self.frame_shape:
            raise ShapeError(
                f"{self.kind} expects frames of shape {self.frame_shape}, got {frames.shape[-3:]}"
            )
        return self.apply_flat(frames.reshape(*frames.shape[:-3], self.state_dim))

    def check_flat(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        if x.shape[-1] != self.state_dim:
            raise ShapeError(f"{self.kind} expects state dim {self.state_dim}, got {x.shape[-1]}")
        return x

    @cached_property
    def dense(self) -> np.ndarray:
        """The `M x D` matrix of this operator."""
        return self.apply_flat(np.eye(self.state_dim)).T

    def matrix(self) -> np.ndarray:
        return self.dense


class SparseMask(ObsOperator):
    """Observe a fixed random subset of pixels, shared across channels and frames.

    The mask has exactly `round(ratio * H * W)` observed pixels. Output is channel-major and
    row-major within each channel.
    """

    kind = "sparse_mask"

    def __init__(self, frame_shape: FrameShape, ratio: float, mask_seed: int = 0):
        super().__init__(frame_shape)
        if not 0 < ratio <= 1:
            raise ValidationError(f"sparse_mask ratio must be in (0, 1], got {ratio}")
        _, H, W = self.frame_shape
        count = int(round(ratio * H * W))
        if count < 1:
            raise ValidationError(f"ratio {ratio} observes no pixels on a {H}x{W} grid")
        self.ratio = float(ratio)
        self.mask_seed = int(mask_seed)
        order = RngStream(self.mask_seed, MASK_STREAM_ID).generator.permutation(H * W)
        self.pixels = np.sort(order[:count])
        self.pixels.setflags(write=False)

    @property
    def count(self) -> int:
        return self.pixels.shape[0]

    @property
    def mask(self) -> np.ndarray:
        _, H, W = self.frame_shape
        mask = np.zeros(H * W, dtype=bool)
        mask[self.pixels] = True
        return mask.reshape(H, W)

    @cached_property
    def indices(self) -> np.ndarray:
        C, H, W = self.frame_shape
        return (np.arange(C)[:, None] * (H * W) + self.pixels[None, :]).ravel()

    @property
    def pixel_coords(self) -> np.ndarray:
        """`[count, 2]` (row, col) positions of observed pixels."""
        _, _, W = self.frame_shape
        return np.stack([self.pixels // W, self.pixels % W], axis=1)

    @property
    def output_dim(self) -> int:
        return self.frame_shape[0] * self.count

    @cached_property
    def dense(self) -> np.ndarray:
        out = np.zeros((self.output_dim, self.state_dim))
        out[np.arange(self.output_dim), self.indices] = 1.0
        return out

    def apply_flat(self, x: np.ndarray) -> np.ndarray:
        return self.check_flat(x)[..., self.indices]

    def adjoint_flat(self, r: np.ndarray) -> np.ndarray:
        r = np.asarray(r, dtype=np.float64)
        out = np.zeros((*r.shape[:-1], self.state_dim))
        out[..., self.indices] = r
        return out

    def to_json(self) -> dict[str, Any]:
        return {
            "kind": self.kind,
            "frame_shape": list(self.frame_shape),
            "ratio": self.ratio,
            "mask_seed": self.mask_seed,
        }


class Downsample(ObsOperator):
    """Block-mean reduction by an integer factor per channel."""

    kind = "downsample"

    def __init__(self, frame_shape: FrameShape, factor: int):
        super().__init__(frame_shape)
        _, H, W = self.frame_shape
        if int(factor) != factor or factor < 1:
            raise ValidationError(f"downsample factor must be a positive integer, got {factor}")
        if H % factor or W % factor:
            raise ValidationError(f"factor {factor} does not divide the {H}x{W} grid")
        self.factor = int(factor)
        self.rows = bilinear_matrix(H, H // self.factor)
        self.cols = bilinear_matrix(W, W // self.factor)

    @property
    def output_shape(self) -> FrameShape:
        C, H, W = self.frame_shape
        return (C, H // self.factor, W // self.factor)

    @property
    def output_dim(self) -> int:
        return int(np.prod(self.output_shape))

    def apply_flat(self, x: np.ndarray) -> np.ndarray:
        x = self.check_flat(x)
        fields = x.reshape(*x.shape[:-1], *self.frame_shape)
        out = np.einsum("ih,...chw,jw->...cij", self.rows, fields, self.cols)
        return out.reshape(*x.shape[:-1], self.output_dim)

    def adjoint_flat(self, r: np.ndarray) -> np.ndarray:
        r = np.asarray(r, dtype=np.float64)
        fields = r.reshape(*r.shape[:-1], *self.output_shape)
        out = np.einsum("ih,...cij,jw->...chw", self.rows, fields, self.cols)
        return out.reshape(*r.shape[:-1], self.state_dim)

    def to_json(self) -> dict[str, Any]:
        return {"kind": self.kind, "frame_shape": list(self.frame_shape), "factor": self.factor}


class LinearMatrix(ObsOperator):
    """An explicit `M x D` observation matrix."""

    kind = "linear_matrix"

    def __init__(self, matrix, frame_shape: FrameShape | None = None):
        matrix = np.atleast_2d(np.asarray(matrix, dtype=np.float64))
        super().__init__(frame_shape or (1, 1, matrix.shape[1]))
        if matrix.shape[1] != self.state_dim:
            raise ShapeError(
                f"matrix has {matrix.shape[1]} columns but frames have {self.state_dim} entries"
            )
        matrix.setflags(write=False)
        self.H = matrix

    @property
    def output_dim(self) -> int:
        return self.H.shape[0]

    def apply_flat(self, x: np.ndarray) -> np.ndarray:
        return self.check_flat(x) @ self.H.T

    def adjoint_flat(self, r: np.ndarray) -> np.ndarray:
        return np.asarray(r, dtype=np.float64) @ self.H

    def matrix(self) -> np.ndarray:
        return self.H

    def to_json(self) -> dict[str, Any]:
        return {
            "kind": self.kind,
            "frame_shape": list(self.frame_shape),
            "matrix": self.H.tolist(),
        }


def apply_operator(op: ObsOperator, frame) -> np.ndarray:
    """Apply `op` to a single `[C, H, W]` frame."""
    return op.apply(frame)


class SparseMaskSpec(BaseModel):
    model_config = ConfigDict(extra="forbid")

    kind: Literal["sparse_mask"] = "sparse_mask"
    ratio: float = Field(gt=0, le=1)
    mask_seed: int = 0

    def build(self, frame_shape: FrameShape, **_) -> SparseMask:
        return SparseMask(frame_shape, self.ratio, self.mask_seed)


class DownsampleSpec(BaseModel):
    model_config = ConfigDict(extra="forbid")

    kind: Literal["downsample"] = "downsample"
    factor: int = Field(ge=1)

    def build(self, frame_shape: FrameShape, **_) -> Downsample:
        return Downsample(frame_shape, self.factor)


class LinearMatrixSpec(BaseModel):
    """Explicit matrix; when omitted the dataset's own observation matrix is used."""

    model_config = ConfigDict(extra="forbid")

    kind: Literal["linear_matrix"] = "linear_matrix"
    matrix: list[list[float]] | None = None

    def build(self, frame_shape: FrameShape, default_matrix=None, **_) -> LinearMatrix:
        matrix = self.matrix if self.matrix is not None else default_matrix
        if matrix is None:
            raise ValidationError("linear_matrix operator needs a matrix")
        return LinearMatrix(matrix, frame_shape)


OperatorSpec = Annotated[
    SparseMaskSpec | DownsampleSpec | LinearMatrixSpec, Field(discriminator="kind")
]


def operator_from_json(content: dict[str, Any]) -> ObsOperator:
    """Rebuild an operator from its `to_json` form."""
    kind = content.get("kind")
    frame_shape: FrameShape = tuple(content["frame_shape"])  # type: ignore[assignment]
    if kind == SparseMask.kind:
        return SparseMask(frame_shape, content["ratio"], content.get("mask_seed", 0))
    if kind == Downsample.kind:
        return Downsample(frame_shape, content["factor"])
    if kind == LinearMatrix.kind:
        return LinearMatrix(content["matrix"], frame_shape)
    raise ValidationError(f"Unknown operator kind: {kind!r}")

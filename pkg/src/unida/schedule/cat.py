"""Causality-aware training (CAT) noise-level sampling."""

__all__ = ["CatConfig", "sample_cat_levels"]

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from unida.common.errors import ValidationError
from unida.core.rng import RngStream


class CatConfig(BaseModel):
    """Mixture of sorted and i.i.d. per-frame noise levels.

    Attributes:
        rho (float): probability of sorting the draw into a non-decreasing staircase.
        rho_c (float): probability of clamping a leading context block to step 0.
        C_max (int): largest clamped context length.
    """

    model_config = ConfigDict(frozen=True, extra="forbid")

    rho: float = Field(default=0.0, ge=0, le=1)
    rho_c: float = Field(default=0.0, ge=0, le=1)
    C_max: int = Field(default=0, ge=0)


def sample_cat_levels(K: int, T: int, cat: CatConfig, rng: RngStream) -> np.ndarray:
    """Draw one training noise-level vector of length K.

    t_k ~ Uniform{1..T} i.i.d.; with probability rho the vector is sorted ascending; then,
    independently with probability rho_c, frames 0..C-1 are set to 0 with C ~ Uniform{1..C_max}.
    """
    if cat.C_max > K:
        raise ValidationError(f"C_max={cat.C_max} exceeds K={K}")
    t = rng.integers(1, T + 1, size=K)
    if rng.random() < cat.rho:
        t = np.sort(t)
    if rng.random() < cat.rho_c and cat.C_max > 0:
        t[: int(rng.integers(1, cat.C_max + 1))] = 0
    return t.astype(np.int64)

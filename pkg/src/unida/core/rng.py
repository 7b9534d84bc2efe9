"""Deterministic counter-based random streams.

Every stochastic consumer receives its own `RngStream`. A stream is keyed by
`(master_seed, stream_id)` into a Philox counter-based generator, so equal keys reproduce
bit-identical draws and distinct keys are independent without shared mutable state.
"""

__all__ = ["RngStream"]

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

_UINT64 = 2**64


@dataclass(frozen=True)
class RngStream:
    """A reproducible random stream.

    Attributes:
        master_seed (int): experiment-level seed (64-bit).
        stream_id (int): consumer identifier (64-bit).

    Example:
        >>> a = RngStream(7, 0).generator.standard_normal(3)
        >>> b = RngStream(7, 0).generator.standard_normal(3)
        >>> bool((a == b).all())
        True
    """

    master_seed: int
    stream_id: int = 0
    _key: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        for name in ("master_seed", "stream_id"):
            value = int(getattr(self, name))
            if not 0 <= value < _UINT64:
                raise ValueError(f"{name} must be a 64-bit unsigned integer, got {value}")
            object.__setattr__(self, name, value)
        object.__setattr__(
            self, "_key", np.array([self.master_seed, self.stream_id], dtype=np.uint64)
        )

    @cached_property
    def generator(self) -> np.random.Generator:
        """The numpy generator backing this stream (created on first use)."""
        return np.random.Generator(np.random.Philox(key=self._key))

    def spawn(self, child_id: int) -> "RngStream":
        """Derive an independent child stream, e.g. one per ensemble member or trajectory."""
        seq = np.random.SeedSequence([self.master_seed, self.stream_id, int(child_id)])
        return RngStream(self.master_seed, int(seq.generate_state(1, np.uint64)[0]))

    def standard_normal(self, size=None) -> np.ndarray:
        return self.generator.standard_normal(size)

    def uniform(self, low: float = 0.0, high: float = 1.0, size=None):
        return self.generator.uniform(low, high, size)

    def integers(self, low: int, high: int | None = None, size=None):
        return self.generator.integers(low, high, size)

    def random(self) -> float:
        return float(self.generator.random())

from unida.observe.normalization import Normalization, convert_noise
from unida.observe.observations import ObservationSet, observe_trajectory
from unida.observe.operators import (
    Downsample,
    LinearMatrix,
    ObsOperator,
    SparseMask,
    apply_operator,
)
from unida.observe.projection import PcaBasis

__all__ = [
    "Downsample",
    "LinearMatrix",
    "Normalization",
    "ObsOperator",
    "ObservationSet",
    "PcaBasis",
    "SparseMask",
    "apply_operator",
    "convert_noise",
    "observe_trajectory",
]

from unida.core.container import read_tensor, write_tensor
from unida.core.frames import stack_frames, unstack_frames
from unida.core.gaussian import GaussianTrajectoryPrior, condition_gaussian
from unida.core.rng import RngStream
from unida.core.trajectory import Trajectory

__all__ = [
    "GaussianTrajectoryPrior",
    "RngStream",
    "Trajectory",
    "condition_gaussian",
    "read_tensor",
    "stack_frames",
    "unstack_frames",
    "write_tensor",
]

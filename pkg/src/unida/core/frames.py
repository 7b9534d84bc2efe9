"""Frame stacking: fold F consecutive frames into the channel axis."""

__all__ = ["stack_frames", "unstack_frames"]

from unida.common.errors import ShapeError
from unida.core.trajectory import Trajectory


def stack_frames(traj: Trajectory, F: int) -> Trajectory:
    """Stack F consecutive frames into channels.

    Frame `k'` of the result holds original frames `k'*F .. k'*F+F-1`, in that order, as
    consecutive channel blocks.

    Args:
        traj (Trajectory): input with K divisible by F.
        F (int): frames per stack.

    Raises:
        ShapeError: if F < 1 or K is not divisible by F.

    Returns:
        Trajectory: with K' = K/F and C' = C*F.
    """
    if F < 1:
        raise ShapeError(f"Stack size must be positive, got F={F}")
    if traj.K % F:
        raise ShapeError(f"Frame count K={traj.K} is not divisible by F={F}")
    K, C, H, W = traj.frames.shape
    return Trajectory(traj.frames.reshape(K // F, F * C, H, W))


def unstack_frames(traj: Trajectory, F: int) -> Trajectory:
    """Inverse of `stack_frames`."""
    if F < 1:
        raise ShapeError(f"Stack size must be positive, got F={F}")
    if traj.C % F:
        raise ShapeError(f"Channel count C={traj.C} is not divisible by F={F}")
    K, C, H, W = traj.frames.shape
    return Trajectory(traj.frames.reshape(K * F, C // F, H, W))

import numpy as np
from pytest import mark, param, raises

from unida.common.errors import ShapeError, ValidationError
from unida.core.frames import stack_frames, unstack_frames
from unida.core.resample import bilinear_matrix, resize_bilinear
from unida.core.rng import RngStream
from unida.core.trajectory import Trajectory


def test__Trajectory__is_immutable_copy():
    frames = np.zeros((2, 1, 3, 3))
    traj = Trajectory(frames)
    frames[0, 0, 0, 0] = 1.0
    assert traj.frames[0, 0, 0, 0] == 0.0
    with raises(ValueError):
        traj.frames[0, 0, 0, 0] = 2.0


@mark.parametrize(
    "frames, error",
    [
        param(np.zeros((2, 3, 3)), ShapeError, id="rank 3"),
        param(np.zeros((0, 1, 3, 3)), ShapeError, id="K=0"),
        param(np.full((1, 1, 2, 2), np.nan), ValidationError, id="non-finite"),
    ],
)
def test__Trajectory__invalid_frames__FAILS(frames, error):
    with raises(error):
        Trajectory(frames)


def test__Trajectory__from_states_views_flat_states():
    traj = Trajectory.from_states(np.arange(6.0).reshape(3, 2))
    assert traj.frames.shape == (3, 1, 1, 2)
    assert traj.state_dim == 2
    np.testing.assert_array_equal(traj.states, np.arange(6.0).reshape(3, 2))


def test__stack_frames__K4_C1_F2_permutes_entries():
    traj = Trajectory(np.arange(4 * 9.0).reshape(4, 1, 3, 3))
    stacked = stack_frames(traj, 2)
    assert stacked.frames.shape == (2, 2, 3, 3)
    np.testing.assert_array_equal(stacked.frames[1, 0], traj.frames[2, 0])
    np.testing.assert_array_equal(stacked.frames[1, 1], traj.frames[3, 0])
    assert sorted(stacked.frames.ravel()) == sorted(traj.frames.ravel())


def test__stack_frames__F1_is_identity():
    traj = Trajectory(RngStream(0).standard_normal((3, 2, 2, 2)))
    assert stack_frames(traj, 1) == traj


def test__unstack_frames__inverts_stack_frames():
    traj = Trajectory(RngStream(1).standard_normal((6, 2, 4, 4)))
    stacked = stack_frames(traj, 3)
    assert stacked.frames.shape == (2, 6, 4, 4)
    assert unstack_frames(stacked, 3) == traj


def test__stack_frames__indivisible__FAILS():
    with raises(ShapeError):
        stack_frames(Trajectory(np.zeros((5, 1, 2, 2))), 2)


def test__bilinear_matrix__factor_two_averages_pairs():
    weights = bilinear_matrix(4, 2)
    np.testing.assert_allclose(weights, [[0.5, 0.5, 0, 0], [0, 0, 0.5, 0.5]])
    np.testing.assert_allclose(weights.sum(axis=1), 1.0)


def test__resize_bilinear__factor_two_is_block_mean():
    field = np.arange(16.0).reshape(4, 4)
    out = resize_bilinear(field, (2, 2))
    expected = field.reshape(2, 2, 2, 2).mean(axis=(1, 3))
    np.testing.assert_allclose(out, expected)


def test__resize_bilinear__factor_four_is_block_mean_of_delta():
    field = np.zeros((8, 8))
    field[0, 0] = 1.0
    out = resize_bilinear(field, (2, 2))
    np.testing.assert_allclose(out, [[1 / 16, 0.0], [0.0, 0.0]])


def test__bilinear_matrix__non_integer_ratio_interpolates():
    weights = bilinear_matrix(3, 2)
    np.testing.assert_allclose(weights.sum(axis=1), 1.0)
    np.testing.assert_allclose(weights, [[0.75, 0.25, 0], [0, 0.25, 0.75]])

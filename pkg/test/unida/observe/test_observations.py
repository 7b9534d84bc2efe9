import numpy as np
from pytest import mark, param, raises

from unida.common.errors import ShapeError, ValidationError
from unida.core.rng import RngStream
from unida.core.trajectory import Trajectory
from unida.observe.normalization import (
    ERA5_ZSCORE,
    NS_MINMAX,
    SEVIR_MINMAX,
    Normalization,
    convert_noise,
)
from unida.observe.observations import ObservationSet, observe_trajectory
from unida.observe.operators import Downsample, LinearMatrix, SparseMask


def _truth(K: int = 4, shape=(1, 8, 8), seed: int = 0) -> Trajectory:
    return Trajectory(RngStream(seed).standard_normal((K, *shape)))


def test__observe_trajectory__tiny_noise_recovers_operator_output():
    truth = _truth()
    op = SparseMask((1, 8, 8), 0.25)
    obs = observe_trajectory(truth, op, 1e-12, RngStream(1))
    np.testing.assert_allclose(obs.values, op.apply(truth.frames), atol=1e-10)
    assert obs.frame_indices == (0, 1, 2, 3)


def test__observe_trajectory__subset_of_frames():
    obs = observe_trajectory(_truth(), Downsample((1, 8, 8), 2), 0.1, RngStream(1), [3, 1])
    assert obs.frame_indices == (1, 3)
    assert obs.get(0) is None
    assert obs.get(3).shape == (16,)
    shifted = obs.shifted(1, 2)
    assert shifted.frame_indices == (0,)
    np.testing.assert_array_equal(shifted.values[0], obs.get(1))


def test__observe_trajectory__noise_is_scaled_standard_normal():
    truth = Trajectory(np.zeros((200, 1, 10, 10)))
    obs = observe_trajectory(truth, SparseMask((1, 10, 10), 1.0), 0.3, RngStream(2))
    assert abs(obs.values.std() - 0.3) < 0.01
    assert abs(obs.values.mean()) < 0.01


@mark.parametrize(
    "op",
    [
        param(SparseMask((1, 8, 8), 0.2), id="sparse_mask"),
        param(Downsample((1, 8, 8), 2), id="downsample"),
    ],
)
def test__observe_trajectory__data_space_noise_converts_exactly_to_raw_space(op):
    truth = _truth()
    norm = NS_MINMAX
    data_obs = observe_trajectory(truth, op, 0.05, RngStream(3))
    raw_truth = Trajectory(norm.denormalize(truth.frames))
    sigma_raw = float(convert_noise(norm, 0.05)[0])
    raw_obs = observe_trajectory(raw_truth, op, sigma_raw, RngStream(3))
    np.testing.assert_allclose(
        raw_obs.values, norm.denormalize(data_obs.values, channel_axis=-1), atol=1e-12
    )


@mark.parametrize(
    "norm, sigma, expected",
    [
        param(Normalization.identity(), 0.05, 0.05, id="identity"),
        param(SEVIR_MINMAX, 0.05, 12.75, id="sevir"),
        param(NS_MINMAX, 0.05, 1.829, id="navier-stokes"),
        param(ERA5_ZSCORE, 0.05, 156.8685, id="era5 z500"),
    ],
)
def test__convert_noise__scales_by_channel_width(norm, sigma, expected):
    assert abs(convert_noise(norm, sigma)[0] - expected) < 1e-9


def test__convert_noise__non_positive__FAILS():
    with raises(ValidationError):
        convert_noise(NS_MINMAX, 0.0)


def test__ObservationSet__save_and_load(tmp_path):
    op = SparseMask((1, 8, 8), 0.25, mask_seed=3)
    obs = observe_trajectory(_truth(), op, 0.05, RngStream(4), [0, 2])
    path = obs.save(tmp_path / "obs" / "obs.fdt")
    restored = ObservationSet.load(path)
    np.testing.assert_array_equal(restored.values, obs.values)
    assert restored.frame_indices == (0, 2)
    assert restored.sigma_y == 0.05
    np.testing.assert_array_equal(restored.operator.pixels, op.pixels)


def test__ObservationSet__invalid_content__FAILS():
    op = LinearMatrix(np.eye(2))
    with raises(ShapeError):
        ObservationSet(np.zeros((2, 3)), (0, 1), op, 0.1)
    with raises(ValidationError):
        ObservationSet(np.zeros((2, 2)), (1, 0), op, 0.1)
    with raises(ValidationError):
        ObservationSet(np.zeros((1, 2)), (0,), op, 0.0)
    with raises(ShapeError):
        observe_trajectory(_truth(K=2, shape=(1, 1, 2)), op, 0.1, RngStream(0), [2])

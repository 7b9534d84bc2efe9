import logging

import numpy as np
from pytest import mark, param, raises

from unida.common.errors import ShapeError, ValidationError
from unida.core.trajectory import Trajectory
from unida.metrics.errors import LatWeights, acc, bias, lat_weights, nrmse


def _frames(seed: int = 0, shape=(3, 1, 4, 4)) -> np.ndarray:
    return np.random.default_rng(seed).standard_normal(shape)


def test__lat_weights__unit_mean_and_symmetric():
    w = lat_weights(32).weights
    assert abs(w.mean() - 1.0) < 1e-12
    np.testing.assert_allclose(w, w[::-1])
    assert w[16] > w[0]


def test__LatWeights__from_latitudes():
    w = LatWeights.from_latitudes([0.0, 60.0])
    np.testing.assert_allclose(w.weights, [4 / 3, 2 / 3])
    assert w.grid((2, 1, 2, 3)).shape == (2, 1, 2, 3)


@mark.parametrize(
    "weights",
    [
        param([1.0, -1.0], id="negative"),
        param([], id="empty"),
        param([1.0, np.inf], id="infinite"),
    ],
)
def test__LatWeights__invalid__FAILS(weights):
    with raises(ValidationError):
        LatWeights(np.asarray(weights))


def test__lat_weights__invalid__FAILS():
    with raises(ValidationError):
        lat_weights(0)
    with raises(ShapeError):
        lat_weights(3).grid((1, 1, 4, 4))


def test__nrmse__relative_per_frame():
    truth = _frames()
    result = nrmse(2 * truth, truth)
    np.testing.assert_allclose(result.per_frame, 1.0)
    assert abs(result.mean - 1.0) < 1e-12
    assert result.undefined_frames == ()


def test__nrmse__accepts_trajectories():
    truth = _frames(1)
    pred = truth + 0.1
    expected = nrmse(pred, truth)
    result = nrmse(Trajectory(pred), Trajectory(truth))
    np.testing.assert_array_equal(result.per_frame, expected.per_frame)


def test__nrmse__zero_truth_frame_is_undefined(caplog):
    truth = _frames(2)
    truth[1] = 0.0
    with caplog.at_level(logging.WARNING, logger="unida.metrics.errors"):
        result = nrmse(truth + 1.0, truth)
    assert result.undefined_frames == (1,)
    assert np.isnan(result.per_frame[1])
    assert abs(result.mean - np.nanmean(result.per_frame)) < 1e-12
    assert "undefined" in caplog.text


def test__nrmse__weighted_absolute_error():
    truth = np.zeros((2, 1, 2, 3))
    pred = np.zeros_like(truth)
    pred[:, :, 0] = 1.0
    weights = LatWeights.from_latitudes([0.0, 60.0])
    result = nrmse(pred, truth, weights)
    np.testing.assert_allclose(result.per_frame, np.sqrt(0.5 * 4 / 3))
    assert np.isfinite(result.mean)
    relative = nrmse(pred, truth + 1.0, weights, relative=True)
    assert np.all(relative.per_frame > 0)


def test__nrmse__shape_mismatch__FAILS():
    with raises(ShapeError):
        nrmse(np.zeros((2, 1, 4, 4)), np.zeros((3, 1, 4, 4)))
    with raises(ShapeError):
        nrmse(np.zeros(4), np.zeros(4))


def test__bias__signed_mean_error():
    truth = _frames(3)
    assert abs(bias(truth + 0.5, truth) - 0.5) < 1e-12
    assert abs(bias(truth - 0.25, truth, lat_weights(4)) + 0.25) < 1e-12


def test__acc__perfect_and_reversed():
    truth = _frames(4)
    clim = np.full_like(truth, 0.3)
    assert abs(acc(truth, truth, clim) - 1.0) < 1e-12
    assert abs(acc(2 * clim - truth, truth, clim) + 1.0) < 1e-12
    assert abs(acc(truth, truth, 0.3, lat_weights(4)) - 1.0) < 1e-12


def test__acc__zero_anomaly_is_nan(caplog):
    truth = _frames(5)
    with caplog.at_level(logging.WARNING, logger="unida.metrics.errors"):
        value = acc(np.zeros_like(truth), truth, 0.0)
    assert np.isnan(value)
    assert "ACC undefined" in caplog.text

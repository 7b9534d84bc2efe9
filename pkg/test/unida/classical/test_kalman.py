import numpy as np
from pytest import raises

from test.unida.base import rotation_ssm
from unida.classical.kalman import kalman_filter, observations_by_frame, rts_smoother
from unida.common.errors import ShapeError
from unida.core.gaussian import condition_gaussian
from unida.core.rng import RngStream
from unida.dynamics.linear import LinearSSM, ssm_simulate, ssm_trajectory_prior
from unida.observe.observations import ObservationSet
from unida.observe.operators import LinearMatrix

K = 10


def _dense_posterior(ssm: LinearSSM, y: np.ndarray, frames: list[int]):
    """Condition the stacked trajectory prior on the observations of `frames`."""
    prior = ssm_trajectory_prior(ssm, K)
    D, M = ssm.D, ssm.M
    G = np.zeros((len(frames) * M, K * D))
    for i, k in enumerate(frames):
        G[i * M : (i + 1) * M, k * D : (k + 1) * D] = ssm.H
    noise = np.kron(np.eye(len(frames)), ssm.R)
    mean, cov = condition_gaussian(prior.mean, prior.cov, G, noise, y[frames].ravel())
    return mean.reshape(K, D), cov


def _observations(ssm: LinearSSM, seed: int = 0) -> np.ndarray:
    _, y = ssm_simulate(ssm, K, RngStream(seed))
    return y


def test__kalman_filter__matches_dense_conditioning():
    ssm = rotation_ssm(M=1)
    y = _observations(ssm)
    filt = kalman_filter(ssm, y)
    for k in range(K):
        mean, cov = _dense_posterior(ssm, y, list(range(k + 1)))
        np.testing.assert_allclose(filt.means[k], mean[k], atol=1e-8)
        block = cov[2 * k : 2 * k + 2, 2 * k : 2 * k + 2]
        np.testing.assert_allclose(filt.covs[k], block, atol=1e-8)


def test__rts_smoother__matches_dense_conditioning():
    ssm = rotation_ssm(M=1)
    y = _observations(ssm, seed=1)
    smooth = rts_smoother(ssm, y)
    mean, cov = _dense_posterior(ssm, y, list(range(K)))
    np.testing.assert_allclose(smooth.means, mean, atol=1e-8)
    for k in range(K):
        np.testing.assert_allclose(
            smooth.covs[k], cov[2 * k : 2 * k + 2, 2 * k : 2 * k + 2], atol=1e-8
        )
    np.testing.assert_allclose(smooth.std()[3], np.sqrt(np.diag(smooth.covs[3])))


def test__kalman_filter__missing_frames():
    ssm = rotation_ssm()
    y = _observations(ssm, seed=2)
    observed = [0, 3, 4, 8]
    masked = np.full_like(y, np.nan)
    masked[observed] = y[observed]
    filt = kalman_filter(ssm, masked)
    smooth = rts_smoother(ssm, masked)
    mean, _ = _dense_posterior(ssm, y, observed)
    np.testing.assert_allclose(smooth.means, mean, atol=1e-8)
    filt_mean, _ = _dense_posterior(ssm, y, [0, 3])
    np.testing.assert_allclose(filt.means[3], filt_mean[3], atol=1e-8)
    # unobserved frames keep the forecast
    np.testing.assert_array_equal(filt.means[5], filt.pred_means[5])


def test__kalman_filter__observation_set_equals_array():
    ssm = rotation_ssm()
    y = _observations(ssm, seed=3)
    obs = ObservationSet(y[[1, 2]], (1, 2), LinearMatrix(ssm.H), 0.1)
    masked = np.full_like(y, np.nan)
    masked[[1, 2]] = y[[1, 2]]
    a = kalman_filter(ssm, obs, K=K)
    b = kalman_filter(ssm, masked)
    np.testing.assert_allclose(a.means, b.means)
    assert kalman_filter(ssm, obs).K == 3
    assert a.trajectory().frames.shape == (K, 1, 1, 2)


def test__observations_by_frame__invalid__FAILS():
    with raises(ShapeError):
        observations_by_frame(np.zeros((3, 2)), 4, 2)
    with raises(ShapeError):
        observations_by_frame(np.zeros((3, 1)), 3, 2)
    with raises(ShapeError):
        observations_by_frame(
            ObservationSet(np.zeros((1, 2)), (5,), LinearMatrix(np.eye(2)), 0.1), 3, 2
        )

import numpy as np
from pytest import raises

from test.unida.base import rotation_ssm
from unida.common.errors import DivergenceError, ShapeError
from unida.core.rng import RngStream
from unida.core.trajectory import Trajectory
from unida.denoise.affine import AffineDenoiser
from unida.denoise.gaussian import gaussian_denoiser
from unida.denoise.noise_schedule import NoiseSchedule
from unida.denoise.training import (
    TrainingConfig,
    as_state_windows,
    denoising_loss,
    gaussian_risk,
    train_denoiser,
)
from unida.dynamics.linear import ssm_trajectory_prior
from unida.schedule.cat import CatConfig

SCHED = NoiseSchedule.cosine(T_base=100, T_s=20)
PRIOR = ssm_trajectory_prior(rotation_ssm(), 2)


def test__train_denoiser__approaches_the_exact_risk():
    data = PRIOR.sample(10_000, RngStream(0))
    pattern = [10, 10]
    initial = AffineDenoiser(2, 2, SCHED, causal=False)
    risks: list[float] = []
    trained = train_denoiser(
        initial,
        data,
        CatConfig(),
        SCHED,
        steps=1500,
        lr=0.05,
        rng=RngStream(1),
        lr_decay=0.005,
        fixed_pattern=pattern,
        checkpoint_every=300,
        on_checkpoint=lambda step, model, loss: risks.append(
            gaussian_risk(model, PRIOR, pattern, SCHED)
        ),
    )
    exact = gaussian_risk(gaussian_denoiser(PRIOR, SCHED, causal=False), PRIOR, pattern, SCHED)
    before = gaussian_risk(initial, PRIOR, pattern, SCHED)
    after = gaussian_risk(trained, PRIOR, pattern, SCHED)
    assert len(risks) == 6
    assert all(b <= a + 1e-3 for a, b in zip(risks, risks[1:]))
    assert after - exact < 0.05 * (before - exact)
    assert not initial.params


def test__train_denoiser__causal_model_stays_causal():
    data = PRIOR.sample(200, RngStream(2))
    trained = train_denoiser(
        AffineDenoiser(2, 2, SCHED, causal=True, n_levels=2),
        data,
        CatConfig(rho=0.5),
        SCHED,
        steps=50,
        lr=0.02,
        rng=RngStream(3),
        batch_size=16,
    )
    assert trained.params
    for theta, _ in trained.params.values():
        assert np.all(theta[:2, 2:] == 0)


def test__train_denoiser__uses_windows_of_longer_trajectories():
    long = ssm_trajectory_prior(rotation_ssm(), 5).sample(20, RngStream(4))
    trained = train_denoiser(
        AffineDenoiser(2, 2, SCHED), long, CatConfig(), SCHED, 5, 0.01, RngStream(5)
    )
    assert trained.K == 2


def test__train_denoiser__checkpoints():
    calls = []
    train_denoiser(
        AffineDenoiser(2, 2, SCHED),
        PRIOR.sample(10, RngStream(6)),
        CatConfig(),
        SCHED,
        steps=10,
        lr=0.01,
        rng=RngStream(7),
        batch_size=4,
        checkpoint_every=5,
        on_checkpoint=lambda step, model, loss: calls.append((step, loss)),
    )
    assert [step for step, _ in calls] == [0, 5, 10]
    assert np.isnan(calls[0][1])
    assert np.isfinite(calls[-1][1])


def test__train_denoiser__divergence__FAILS():
    with raises(DivergenceError):
        train_denoiser(
            AffineDenoiser(2, 2, SCHED, causal=False),
            PRIOR.sample(50, RngStream(8)),
            CatConfig(),
            SCHED,
            steps=500,
            lr=1e3,
            rng=RngStream(9),
            fixed_pattern=[10, 10],
        )


def test__train_denoiser__incompatible_data__FAILS():
    with raises(ShapeError):
        train_denoiser(
            AffineDenoiser(3, 2, SCHED), PRIOR.sample(5, RngStream(0)), CatConfig(), SCHED,
            1, 0.01, RngStream(0),
        )
    with raises(ShapeError):
        as_state_windows(np.zeros((2, 3)))


def test__as_state_windows__accepts_trajectories():
    trajs = [Trajectory.from_states(np.ones((3, 4))), Trajectory.from_states(np.zeros((3, 4)))]
    assert as_state_windows(trajs).shape == (2, 3, 4)


def test__denoising_loss__matches_gaussian_risk():
    den = gaussian_denoiser(PRIOR, SCHED, causal=False)
    data = PRIOR.sample(20_000, RngStream(10))
    pattern = [5, 15]
    loss = denoising_loss(den, data, [pattern], SCHED, RngStream(11))
    risk = gaussian_risk(den, PRIOR, pattern, SCHED)
    assert abs(loss - risk) < 0.05 * risk


def test__TrainingConfig__defaults():
    config = TrainingConfig()
    assert config.steps == 2000
    assert config.batch_size == 64

import numpy as np
import pydantic
from pytest import raises

from unida.core.rng import RngStream
from unida.dynamics.navier_stokes import (
    NsConfig,
    NsSolver,
    enstrophy,
    ns_generate,
    ns_initial_condition,
    ns_propagate,
    ns_step,
)


def _grid(N: int) -> np.ndarray:
    x = 2 * np.pi * np.arange(N) / N
    return np.meshgrid(x, x, indexing="xy")[0]


def test__ns_step__single_mode_decays_exponentially():
    cfg = NsConfig(N=32, nu=1e-3, alpha=0.1, forcing=0.0, dt_sim=2e-3)
    solver = NsSolver.for_config(cfg)
    omega_hat = solver.to_spectral(2.0 * np.sin(3 * _grid(32)))
    for _ in range(250):
        omega_hat = ns_step(omega_hat, cfg, None)
    omega = solver.to_physical(omega_hat)
    mode = np.sin(3 * _grid(32))
    amplitude = 2 * np.mean(omega * mode)
    expected = 2.0 * np.exp(-(9 * cfg.nu + cfg.alpha) * 0.5)
    assert abs(amplitude - expected) / expected < 1e-3
    np.testing.assert_allclose(omega, amplitude * mode, atol=1e-10)


def test__ns_step__nearly_inviscid_unforced_conserves_enstrophy():
    cfg = NsConfig(N=32, nu=1e-12, alpha=0.0, forcing=0.0, dt_sim=1e-3)
    solver = NsSolver.for_config(cfg)
    omega_hat = solver.to_spectral(ns_initial_condition(cfg, RngStream(0)))
    start = enstrophy(solver.to_physical(omega_hat))
    for _ in range(100):
        omega_hat = ns_step(omega_hat, cfg, None)
    end = enstrophy(solver.to_physical(omega_hat))
    assert abs(end - start) / start < 1e-2


def test__NsSolver__unforced_dissipation_and_dealiasing():
    cfg = NsConfig(N=32, forcing=0.0)
    solver = NsSolver.for_config(cfg)
    omega_hat = solver.to_spectral(ns_initial_condition(cfg, RngStream(1)))
    values = [enstrophy(solver.to_physical(omega_hat))]
    for _ in range(10):
        omega_hat = solver.integrate(omega_hat, 25, None)
        values.append(enstrophy(solver.to_physical(omega_hat)))
        high = (np.abs(solver.kx) > 32 / 3) | (np.abs(solver.ky) > 32 / 3)
        assert np.all(omega_hat[np.broadcast_to(high, omega_hat.shape)] == 0)
        assert np.abs(np.fft.ifft2(omega_hat).imag).max() < 1e-10
    assert all(b <= a for a, b in zip(values, values[1:]))


def test__ns_initial_condition__has_requested_rms_and_zero_mean():
    cfg = NsConfig(N=32, init_amplitude=2.5)
    omega = ns_initial_condition(cfg, RngStream(3))
    assert abs(np.sqrt(np.mean(omega**2)) - 2.5) < 1e-10
    assert abs(omega.mean()) < 1e-12


def test__ns_generate__deterministic_and_thread_invariant():
    cfg = NsConfig(N=16, store_interval=0.1, seed=7)
    first = ns_generate(cfg, 2, K=3, burn_in=0.1)
    second = ns_generate(cfg, 2, K=3, burn_in=0.1, threads=2)
    assert [t.frames.shape for t in first.trajectories] == [(3, 1, 16, 16)] * 2
    assert all(a == b for a, b in zip(first.trajectories, second.trajectories))
    assert first.trajectories[0] != first.trajectories[1]
    assert first.x_min == min(t.frames.min() for t in first.trajectories)
    assert first.width == first.x_max - first.x_min


def test__ns_generate__single_frame_trajectories():
    dataset = ns_generate(NsConfig(N=16, seed=1), 1, K=1)
    assert dataset.trajectories[0].K == 1


def test__ns_generate__fine_grid_is_downsampled():
    cfg = NsConfig(N=16, fine_factor=2, store_interval=0.1)
    dataset = ns_generate(cfg, 1, K=2)
    assert dataset.trajectories[0].frames.shape == (2, 1, 16, 16)


def test__ns_propagate__member_streams_are_independent():
    cfg = NsConfig(N=16, store_interval=0.1)
    fields = np.stack([ns_initial_condition(cfg, RngStream(0))] * 2)
    out = ns_propagate(fields, cfg, 10, RngStream(5))
    assert out.shape == (2, 16, 16)
    assert not np.allclose(out[0], out[1])
    np.testing.assert_array_equal(out, ns_propagate(fields, cfg, 10, RngStream(5)))


def test__NsConfig__invalid_grid__FAILS():
    with raises(pydantic.ValidationError):
        NsConfig(N=24)
    with raises(pydantic.ValidationError):
        NsConfig(dt_sim=2e-3, store_interval=0.0031)

"""Stochastic 2-D Navier-Stokes vorticity solver on the periodic square [0, 2pi]^2.

    d omega + (v . grad omega) dt = (nu lap omega - alpha omega) dt + eps_f sum_i a_i f_i dW_i

Pseudo-spectral in space with 2/3-rule dealiasing; semi-implicit Euler-Maruyama in time
(advection explicit, viscosity and drag implicit). Arrays are indexed `[..., y, x]`.
"""

__all__ = [
    "NsConfig",
    "NsDataset",
    "NsSolver",
    "ns_step",
    "ns_generate",
    "ns_initial_condition",
    "ns_propagate",
    "enstrophy",
]

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from functools import cached_property, lru_cache
from typing import Self

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from unida.common.errors import DivergenceError
from unida.core.resample import resize_bilinear
from unida.core.rng import RngStream
from unida.core.trajectory import Trajectory

logger = logging.getLogger(__name__)

N_FORCING_MODES = 8


class NsConfig(BaseModel):
    """Physics and integration settings.

    Attributes:
        N (int): grid points per side (power of two, >= 16).
        nu (float): viscosity.
        alpha (float): linear drag.
        forcing (float): stochastic forcing amplitude eps_f.
        forcing_amplitudes (tuple[float, ...]): per-mode weights of the eight forcing patterns.
        dt_sim (float): integration step.
        store_interval (float): time between stored frames, a multiple of dt_sim.
        init_amplitude (float): RMS vorticity of the random initial condition.
        fine_factor (int): integrate at N*fine_factor and downsample on storage.
        seed (int): master seed for trajectory streams.
    """

    model_config = ConfigDict(frozen=True, extra="forbid")

    N: int = 64
    nu: float = Field(default=1e-3, gt=0)
    alpha: float = Field(default=0.1, ge=0)
    forcing: float = Field(default=1.0, ge=0)
    forcing_amplitudes: tuple[float, ...] = (1.0,) * N_FORCING_MODES
    dt_sim: float = Field(default=2e-3, gt=0)
    store_interval: float = Field(default=0.5, gt=0)
    init_amplitude: float = Field(default=1.0, ge=0)
    fine_factor: int = Field(default=1, ge=1)
    seed: int = Field(default=0, ge=0)

    @model_validator(mode="after")
    def check_grid_and_interval(self) -> Self:
        if self.N < 16 or self.N & (self.N - 1):
            raise ValueError(f"N must be a power of two >= 16, got {self.N}")
        if self.fine_factor & (self.fine_factor - 1):
            raise ValueError(f"fine_factor must be a power of two, got {self.fine_factor}")
        ratio = self.store_interval / self.dt_sim
        if abs(ratio - round(ratio)) > 1e-9 * max(1.0, ratio):
            raise ValueError(
                f"store_interval={self.store_interval} is not a multiple of "
                f"dt_sim={self.dt_sim}"
            )
        if len(self.forcing_amplitudes) != N_FORCING_MODES:
            raise ValueError(
                f"forcing_amplitudes needs {N_FORCING_MODES} entries, "
                f"got {len(self.forcing_amplitudes)}"
            )
        return self

    @property
    def steps_per_store(self) -> int:
        return int(round(self.store_interval / self.dt_sim))


def forcing_patterns(N: int) -> np.ndarray:
    """The eight forcing fields, shape `[8, N, N]`."""
    x = 2 * np.pi * np.arange(N) / N
    X, Y = np.meshgrid(x, x, indexing="xy")
    return np.stack(
        [
            np.sin(6 * X),
            np.cos(7 * X),
            np.sin(5 * (X + Y)),
            np.cos(8 * (X + Y)),
            np.cos(6 * X),
            np.sin(7 * X),
            np.cos(5 * (X + Y)),
            np.sin(8 * (X + Y)),
        ]
    )


def enstrophy(omega: np.ndarray) -> np.ndarray:
    """Sum of squared vorticity over the two trailing axes."""
    return np.sum(np.asarray(omega) ** 2, axis=(-2, -1))


class NsSolver:
    """Precomputed spectral operators for one configuration.

    States are full complex `fft2` coefficients with shape `[..., N, N]`.
    """

    def __init__(self, cfg: NsConfig):
        self.cfg = cfg
        N = cfg.N
        k = np.fft.fftfreq(N, 1.0 / N)
        self.kx = k[np.newaxis, :]
        self.ky = k[:, np.newaxis]
        self.ksq = self.kx**2 + self.ky**2
        self.inv_ksq = np.divide(1.0, self.ksq, out=np.zeros_like(self.ksq), where=self.ksq > 0)
        cutoff = N / 3.0
        self.dealias = ((np.abs(self.kx) <= cutoff) & (np.abs(self.ky) <= cutoff)).astype(float)
        self.dealias[0, 0] = 0.0
        self.implicit = 1.0 / (1.0 + cfg.dt_sim * (cfg.nu * self.ksq + cfg.alpha))

    @classmethod
    @lru_cache(maxsize=16)
    def for_config(cls, cfg: NsConfig) -> "NsSolver":
        return cls(cfg)

    @cached_property
    def forcing_hat(self) -> np.ndarray:
        weights = np.asarray(self.cfg.forcing_amplitudes)[:, None, None]
        return np.fft.fft2(weights * forcing_patterns(self.cfg.N)) * self.dealias

    def to_spectral(self, omega: np.ndarray) -> np.ndarray:
        return np.fft.fft2(omega) * self.dealias

    def to_physical(self, omega_hat: np.ndarray) -> np.ndarray:
        return np.fft.ifft2(omega_hat).real

    def advection(self, omega_hat: np.ndarray) -> np.ndarray:
        """Dealiased spectral coefficients of -(v . grad omega)."""
        psi_hat = omega_hat * self.inv_ksq
        u = np.fft.ifft2(1j * self.ky * psi_hat).real
        v = np.fft.ifft2(-1j * self.kx * psi_hat).real
        omega_x = np.fft.ifft2(1j * self.kx * omega_hat).real
        omega_y = np.fft.ifft2(1j * self.ky * omega_hat).real
        return -np.fft.fft2(u * omega_x + v * omega_y) * self.dealias

    def step(self, omega_hat: np.ndarray, increments: np.ndarray | None) -> np.ndarray:
        """Advance one dt_sim.

        Args:
            omega_hat (np.ndarray): spectral state `[..., N, N]`.
            increments (np.ndarray | None): Wiener increments `[..., 8]` with variance dt_sim;
                None for unforced dynamics.
        """
        dt = self.cfg.dt_sim
        rhs = omega_hat + dt * self.advection(omega_hat)
        if increments is not None and self.cfg.forcing > 0:
            rhs = rhs + self.cfg.forcing * np.einsum(
                "...i,ixy->...xy", increments, self.forcing_hat
            )
        return rhs * self.implicit * self.dealias

    def integrate(
        self, omega_hat: np.ndarray, n_steps: int, increments: np.ndarray | None, step0: int = 0
    ) -> np.ndarray:
        """Run `n_steps`, checking for blow-up after each one.

        Args:
            increments (np.ndarray | None): `[n_steps, ..., 8]` Wiener increments.
            step0 (int): global index of the first step, used in error reports.
        """
        for i in range(n_steps):
            omega_hat = self.step(omega_hat, None if increments is None else increments[i])
            if not np.all(np.isfinite(omega_hat)):
                raise DivergenceError("Navier-Stokes state became non-finite", step=step0 + i)
        return omega_hat

    def draw_increments(self, n_steps: int, rng: RngStream) -> np.ndarray:
        return np.sqrt(self.cfg.dt_sim) * rng.standard_normal((n_steps, N_FORCING_MODES))


def ns_step(state: np.ndarray, cfg: NsConfig, rng: RngStream | None) -> np.ndarray:
    """Advance spectral coefficients one dt_sim (unforced when `rng` is None)."""
    solver = NsSolver.for_config(cfg)
    increments = None if rng is None else solver.draw_increments(1, rng)[0]
    out = solver.step(np.asarray(state, dtype=np.complex128), increments)
    if not np.all(np.isfinite(out)):
        raise DivergenceError("Navier-Stokes state became non-finite", step=0)
    return out


def ns_initial_condition(cfg: NsConfig, rng: RngStream, max_mode: int = 4) -> np.ndarray:
    """Random zero-mean vorticity on modes 1 <= |k| <= max_mode with RMS `init_amplitude`."""
    solver = NsSolver.for_config(cfg)
    band = (solver.ksq >= 1) & (solver.ksq <= max_mode**2)
    coeffs = rng.standard_normal((2, cfg.N, cfg.N))
    omega = np.fft.ifft2((coeffs[0] + 1j * coeffs[1]) * band).real
    rms = np.sqrt(np.mean(omega**2))
    if rms > 0:
        omega *= cfg.init_amplitude / rms
    return omega


@dataclass(frozen=True)
class NsDataset:
    """Generated trajectories plus the empirical value range used for min-max scaling."""

    trajectories: list[Trajectory]
    x_min: float
    x_max: float

    @property
    def width(self) -> float:
        return self.x_max - self.x_min


def _generate_one(cfg: NsConfig, index: int, K: int, burn_in: float) -> Trajectory:
    rng = RngStream(cfg.seed, index)
    fine_cfg = cfg.model_copy(update={"N": cfg.N * cfg.fine_factor, "fine_factor": 1})
    solver = NsSolver.for_config(fine_cfg)
    omega_hat = solver.to_spectral(ns_initial_condition(fine_cfg, rng))
    burn_steps = int(round(burn_in / cfg.dt_sim))
    omega_hat = solver.integrate(omega_hat, burn_steps, solver.draw_increments(burn_steps, rng))
    frames = np.empty((K, 1, cfg.N, cfg.N))
    step = burn_steps
    for k in range(K):
        if k:
            n = cfg.steps_per_store
            omega_hat = solver.integrate(omega_hat, n, solver.draw_increments(n, rng), step)
            step += n
        omega = solver.to_physical(omega_hat)
        if cfg.fine_factor > 1:
            omega = resize_bilinear(omega, (cfg.N, cfg.N))
        frames[k, 0] = omega
    logger.debug(f"Generated NS trajectory {index}: K={K}, steps={step}")
    return Trajectory(frames)


def ns_generate(
    cfg: NsConfig, n_traj: int, K: int, burn_in: float = 0.0, threads: int = 1
) -> NsDataset:
    """Generate independent vorticity trajectories.

    Trajectory `i` draws from `RngStream(cfg.seed, i)`, so output does not depend on `threads`.

    Args:
        cfg (NsConfig): physics configuration.
        n_traj (int): number of trajectories.
        K (int): frames per trajectory, stored every `store_interval` after the burn-in.
        burn_in (float): spin-up time discarded before the first stored frame.
        threads (int): worker threads.

    Raises:
        DivergenceError: if any integration blows up.

    Returns:
        NsDataset: trajectories and the empirical min/max.
    """
    if burn_in < 0:
        raise ValueError(f"burn_in must be >= 0, got {burn_in}")
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            trajectories = list(
                pool.map(lambda i: _generate_one(cfg, i, K, burn_in), range(n_traj))
            )
    else:
        trajectories = [_generate_one(cfg, i, K, burn_in) for i in range(n_traj)]
    x_min = min(float(t.frames.min()) for t in trajectories)
    x_max = max(float(t.frames.max()) for t in trajectories)
    logger.info(f"Generated {n_traj} NS trajectories (K={K}); range [{x_min:.3f}, {x_max:.3f}]")
    return NsDataset(trajectories=trajectories, x_min=x_min, x_max=x_max)


def ns_propagate(fields: np.ndarray, cfg: NsConfig, n_steps: int, rng: RngStream) -> np.ndarray:
    """Advance an ensemble of physical vorticity fields `[N_e, N, N]` by `n_steps`.

    Member `m` draws its forcing from `rng.spawn(m)`.
    """
    solver = NsSolver.for_config(cfg)
    fields = np.asarray(fields, dtype=np.float64)
    increments = np.stack(
        [solver.draw_increments(n_steps, rng.spawn(m)) for m in range(fields.shape[0])], axis=1
    )
    omega_hat = solver.integrate(solver.to_spectral(fields), n_steps, increments)
    return solver.to_physical(omega_hat)

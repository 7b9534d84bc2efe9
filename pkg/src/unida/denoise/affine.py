"""Trainable affine denoiser with one parameter set per noise-pattern bucket."""

__all__ = ["AffineDenoiser", "save_affine", "load_affine"]

import json
import logging
from pathlib import Path

import numpy as np

from unida.common.errors import ShapeError, ValidationError
from unida.core.container import read_tensor, write_tensor
from unida.denoise.base import AffineMapDenoiser
from unida.denoise.noise_schedule import NoiseSchedule

logger = logging.getLogger(__name__)

BucketKey = tuple[int, ...]
MANIFEST_NAME = "affine_denoiser.json"


class AffineDenoiser(AffineMapDenoiser):
    """eps_hat = Theta_B x + b_B where B is the bucket of the step pattern t.

    Each frame step is quantized into `n_levels` bins over 1..T_s (step 0 keeps bin 0). New
    buckets start at the optimum for a standard-normal prior (Theta = diag(sqrt(1 - alpha_bar)),
    b = 0). When `causal`, Theta is masked to be block lower triangular after every update.

    Args:
        K (int): frames.
        D (int): state dimension per frame.
        schedule (NoiseSchedule): noise schedule.
        causal (bool): enforce the causal block structure.
        n_levels (int | None): bins per frame; defaults to T_s (one bucket per exact pattern).
    """

    def __init__(
        self,
        K: int,
        D: int,
        schedule: NoiseSchedule,
        causal: bool = True,
        n_levels: int | None = None,
    ):
        self.K = int(K)
        self.D = int(D)
        self.schedule = schedule
        self.is_causal = bool(causal)
        self.n_levels = int(n_levels or schedule.T_s)
        if not 1 <= self.n_levels <= schedule.T_s:
            raise ValidationError(f"n_levels must be in [1, {schedule.T_s}], got {n_levels}")
        n = self.K * self.D
        blocks = np.tril(np.ones((self.K, self.K))) if self.is_causal else np.ones((K, K))
        self.mask = np.kron(blocks, np.ones((self.D, self.D)))
        self.params: dict[BucketKey, tuple[np.ndarray, np.ndarray]] = {}
        self._warned: set[BucketKey] = set()
        self._dim = n

    def bucket(self, t) -> BucketKey:
        t = np.asarray(t, dtype=np.int64)
        if t.shape != (self.K,):
            raise ShapeError(f"Expected {self.K} frame steps, got shape {t.shape}")
        bins = np.where(t == 0, 0, 1 + (t - 1) * self.n_levels // self.schedule.T_s)
        return tuple(int(v) for v in bins)

    def initial_params(self, t) -> tuple[np.ndarray, np.ndarray]:
        _, s = self.schedule.signal_noise(np.asarray(t, dtype=np.int64))
        return np.diag(np.repeat(s, self.D)), np.zeros(self._dim)

    def get_or_create(self, t) -> tuple[np.ndarray, np.ndarray]:
        key = self.bucket(t)
        if key not in self.params:
            self.params[key] = self.initial_params(t)
        return self.params[key]

    def affine_map(self, t) -> tuple[np.ndarray, np.ndarray]:
        key = self.bucket(t)
        found = self.params.get(key)
        if found is not None:
            return found
        if key not in self._warned:
            logger.warning(f"No trained parameters for bucket {key}; using prior initialization")
            self._warned.add(key)
        return self.initial_params(t)

    def update(self, key: BucketKey, grad_theta: np.ndarray, grad_b: np.ndarray, lr: float):
        theta, b = self.params[key]
        theta -= lr * grad_theta
        theta *= self.mask
        b -= lr * grad_b

    def copy(self) -> "AffineDenoiser":
        clone = AffineDenoiser(self.K, self.D, self.schedule, self.is_causal, self.n_levels)
        clone.params = {k: (th.copy(), b.copy()) for k, (th, b) in self.params.items()}
        return clone

    def is_finite(self) -> bool:
        return all(
            np.all(np.isfinite(th)) and np.all(np.isfinite(b)) for th, b in self.params.values()
        )


def save_affine(model: AffineDenoiser, directory: str | Path) -> Path:
    """Write bucket parameters as FDT1 tensors and a JSON manifest."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    buckets = []
    for i, key in enumerate(sorted(model.params)):
        theta, b = model.params[key]
        write_tensor(directory / f"theta_{i:05d}.fdt", theta)
        write_tensor(directory / f"offset_{i:05d}.fdt", b)
        buckets.append(
            {"key": list(key), "theta": f"theta_{i:05d}.fdt", "offset": f"offset_{i:05d}.fdt"}
        )
    manifest = {
        "K": model.K,
        "D": model.D,
        "causal": model.is_causal,
        "n_levels": model.n_levels,
        "T_s": model.schedule.T_s,
        "schedule_hash": model.schedule.schedule_hash,
        "buckets": buckets,
    }
    path = directory / MANIFEST_NAME
    path.write_text(json.dumps(manifest, sort_keys=True, indent=2) + "\n")
    logger.info(f"Saved affine denoiser with {len(buckets)} buckets to {directory}")
    return path


def load_affine(directory: str | Path, schedule: NoiseSchedule) -> AffineDenoiser:
    """Load parameters written by `save_affine`; the schedule must match the saved hash."""
    directory = Path(directory)
    manifest = json.loads((directory / MANIFEST_NAME).read_text())
    if manifest["schedule_hash"] != schedule.schedule_hash:
        raise ValidationError(
            f"Denoiser in {directory} was trained with a different noise schedule"
        )
    model = AffineDenoiser(
        manifest["K"], manifest["D"], schedule, manifest["causal"], manifest["n_levels"]
    )
    for entry in manifest["buckets"]:
        model.params[tuple(entry["key"])] = (
            read_tensor(directory / entry["theta"]),
            read_tensor(directory / entry["offset"]),
        )
    return model

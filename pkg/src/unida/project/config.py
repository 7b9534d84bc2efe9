"""Experiment configuration models.

An experiment file (JSON or YAML) describes the dataset, the observation operator and noise,
the window length and context, the assimilation method, and the output directory. Unknown keys
are errors. A config may name a bundled `preset` whose values sit beneath its own.
"""

__all__ = [
    "EnvVarStr",
    "NsDatasetSpec",
    "SsmDatasetSpec",
    "DatasetSpec",
    "DenoiserSpec",
    "ForcingDasMethod",
    "EnkfMethod",
    "EnksMethod",
    "Var3dMethod",
    "Var4dMethod",
    "KfMethod",
    "RtsMethod",
    "MethodSpec",
    "ForecastSpec",
    "ExperimentConfig",
    "load_presets",
]

import json
import logging
from collections.abc import Mapping
from functools import cache
from importlib import resources
from pathlib import Path
from typing import Annotated, Any, Literal, Self

import numpy as np
import yaml
from aibs_informatics_core.collections import DeepChainMap
from aibs_informatics_core.utils.file_operations import find_paths
from aibs_informatics_core.utils.hashing import sha256_hexdigest
from aibs_informatics_core.utils.os_operations import expandvars
from pydantic import BaseModel, ConfigDict, Field, PlainValidator, model_validator

from unida.classical.localization import LocalizationConfig
from unida.classical.variational import CvtConfig
from unida.common.errors import ConfigError
from unida.denoise.noise_schedule import NoiseSchedule
from unida.denoise.training import TrainingConfig
from unida.dynamics.linear import LinearSSM
from unida.dynamics.navier_stokes import NsConfig
from unida.metrics.csi import SEVIR_THRESHOLDS
from unida.observe.normalization import NS_MINMAX, Normalization
from unida.observe.operators import (
    FrameShape,
    LinearMatrixSpec,
    ObsOperator,
    OperatorSpec,
    SparseMaskSpec,
)
from unida.schedule.cat import CatConfig
from unida.schedule.matrix import Regime

logger = logging.getLogger(__name__)

PRESETS_RESOURCE = "presets.yaml"


class EnvVarStr(str):
    """String type that expands `$VAR` and `${VAR}` on validation."""

    @classmethod
    def validate(cls, v):
        if v is not None and not isinstance(v, str):
            raise TypeError("string required")
        return expandvars(v, "", False) if v else v

    def __repr__(self):
        return f"{self.__class__.__name__}({super().__repr__()})"


PathStr = Annotated[str, PlainValidator(EnvVarStr.validate)]


class _Spec(BaseModel):
    model_config = ConfigDict(extra="forbid")


# -------------------------------------------------------------------------------------------------
# datasets
# -------------------------------------------------------------------------------------------------


class NsDatasetSpec(_Spec):
    """Forced Navier-Stokes vorticity trajectories, stored min-max normalized.

    Attributes:
        ns (NsConfig): solver settings (its seed is replaced by the experiment seed).
        n_train (int): training trajectories written next to the evaluation truth.
        burn_in (float): simulated time discarded before the first stored frame.
        normalize (bool): store fields in the min-max normalized space.
        csi_thresholds: CSI exceedance thresholds in stored units.
    """

    kind: Literal["ns"] = "ns"
    ns: NsConfig = Field(default_factory=NsConfig)
    n_train: int = Field(default=0, ge=0)
    burn_in: float = Field(default=0.0, ge=0)
    normalize: bool = True
    csi_thresholds: tuple[float, ...] = SEVIR_THRESHOLDS

    @property
    def frame_shape(self) -> FrameShape:
        return (1, self.ns.N, self.ns.N)

    @property
    def normalization(self) -> Normalization:
        return NS_MINMAX if self.normalize else Normalization.identity()


class SsmDatasetSpec(_Spec):
    """Linear-Gaussian system; the observation noise covariance is sigma_y^2 I.

    Attributes:
        A, Q, H, mu0, P0: system matrices (see `LinearSSM`).
        n_train (int): training trajectories.
        csi_thresholds: CSI exceedance thresholds.
    """

    kind: Literal["ssm"] = "ssm"
    A: list[list[float]] = [[0.95, 0.1], [-0.1, 0.95]]
    Q: list[list[float]] = [[0.05, 0.0], [0.0, 0.05]]
    H: list[list[float]] = [[1.0, 0.0], [0.0, 1.0]]
    mu0: list[float] = [0.0, 0.0]
    P0: list[list[float]] = [[1.0, 0.0], [0.0, 1.0]]
    n_train: int = Field(default=0, ge=0)
    csi_thresholds: tuple[float, ...] = SEVIR_THRESHOLDS

    @property
    def frame_shape(self) -> FrameShape:
        return (1, 1, len(self.mu0))

    def build(self, sigma_y: float) -> LinearSSM:
        M = len(self.H)
        return LinearSSM(
            A=self.A, Q=self.Q, H=self.H, R=sigma_y**2 * np.eye(M), mu0=self.mu0, P0=self.P0
        )


DatasetSpec = Annotated[NsDatasetSpec | SsmDatasetSpec, Field(discriminator="kind")]


# -------------------------------------------------------------------------------------------------
# methods
# -------------------------------------------------------------------------------------------------


class DenoiserSpec(_Spec):
    """Denoiser choice and noise schedule.

    Attributes:
        kind: "gaussian" (exact, linear-Gaussian datasets) or "affine" (trained).
        causal (bool): causal conditioning / block lower-triangular parameters.
        T_s (int): sampling-grid steps.
        T_base (int): base cosine schedule length.
        pca_rank (int | None): train and sample in a whitened PCA latent of this rank.
        window (int | None): frames per denoiser window; defaults to the experiment K. Shorter
            windows slide over the trajectory.
        n_levels (int | None): per-frame noise bins of the affine parameter buckets; defaults to
            T_s (one bucket per exact step pattern).
        path (str | None): directory of a previously trained affine denoiser.
        training (TrainingConfig): SGD settings.
        cat (CatConfig): causality-aware noise-level sampling.
    """

    kind: Literal["gaussian", "affine"] = "affine"
    causal: bool = True
    T_s: int = Field(default=100, ge=1)
    T_base: int = Field(default=1000, ge=1)
    pca_rank: int | None = Field(default=None, ge=1, le=64)
    window: int | None = Field(default=None, ge=1)
    n_levels: int | None = Field(default=None, ge=1)
    path: PathStr | None = None
    training: TrainingConfig = Field(default_factory=TrainingConfig)
    cat: CatConfig = Field(default_factory=CatConfig)

    def schedule(self) -> NoiseSchedule:
        return NoiseSchedule.cosine(T_base=self.T_base, T_s=self.T_s)


class ForcingDasMethod(_Spec):
    kind: Literal["forcingdas"] = "forcingdas"
    regime: Regime = Regime.AR
    u: int | None = Field(default=None, ge=0)
    gamma_guidance: float = Field(default=0.05, ge=0)
    zeta: float = Field(default=4.0, ge=0)
    ddim_eta: float = Field(default=0.0, ge=0, le=1)
    n_samples: int = Field(default=1, ge=1)
    denoiser: DenoiserSpec = Field(default_factory=DenoiserSpec)

    def resolved_u(self) -> int:
        return self.regime.resolve_u(self.denoiser.T_s, self.u)

    def window_frames(self, K: int) -> int:
        return min(self.denoiser.window or K, K)


class _EnsembleMethod(_Spec):
    """Shared ensemble settings; `init_spread` scales the initial ensemble perturbations."""

    n_ensemble: int = Field(default=100, ge=2)
    inflation: float = Field(default=1.10, ge=1)
    localization: LocalizationConfig | None = Field(default_factory=LocalizationConfig)
    init_spread: float = Field(default=1.0, gt=0)


class EnkfMethod(_EnsembleMethod):
    kind: Literal["enkf"] = "enkf"


class EnksMethod(_EnsembleMethod):
    kind: Literal["enks"] = "enks"
    lag: int = Field(default=20, ge=0)


class Var3dMethod(_Spec):
    kind: Literal["var3d"] = "var3d"
    cvt: CvtConfig = Field(default_factory=CvtConfig)


class Var4dMethod(_Spec):
    kind: Literal["var4d"] = "var4d"
    window: int = Field(default=5, ge=1)
    sigma_b: float = Field(default=1.0, gt=0)


class KfMethod(_Spec):
    kind: Literal["kf"] = "kf"


class RtsMethod(_Spec):
    kind: Literal["rts"] = "rts"


MethodSpec = Annotated[
    ForcingDasMethod | EnkfMethod | EnksMethod | Var3dMethod | Var4dMethod | KfMethod | RtsMethod,
    Field(discriminator="kind"),
]

SSM_ONLY_METHODS = ("kf", "rts", "var4d")


class ForecastSpec(_Spec):
    """Free-running forecast: `context` clean truth frames, then `horizon` sampled frames."""

    context: int = Field(default=1, ge=1)
    horizon: int = Field(default=3, ge=0)
    n_members: int = Field(default=16, ge=1)
    ddim_eta: float = Field(default=0.0, ge=0, le=1)


# -------------------------------------------------------------------------------------------------
# experiment
# -------------------------------------------------------------------------------------------------


class ExperimentConfig(_Spec):
    """A complete experiment.

    Attributes:
        name (str): label used in reports.
        preset (str | None): bundled preset merged beneath this config.
        dataset: dataset section.
        operator: observation operator; defaults to a 5% mask (NS) or the system H (SSM).
        sigma_y (float): observation noise std in the stored (normalized) space.
        obs_stride (int): observe every `obs_stride`-th frame starting at frame 0.
        K (int): trajectory length in frames.
        context (int): leading clean context frames (< K).
        method: assimilation method.
        forecast (ForecastSpec | None): forecast settings for `unida forecast`.
        seed (int): master seed.
        output_dir (str): artifact root; `$VAR` references are expanded.
    """

    name: str = "experiment"
    preset: str | None = None
    dataset: DatasetSpec = Field(default_factory=SsmDatasetSpec)
    operator: OperatorSpec | None = None
    sigma_y: float = Field(default=0.05, gt=0)
    obs_stride: int = Field(default=1, ge=1)
    K: int = Field(default=30, ge=1)
    context: int = Field(default=0, ge=0)
    method: MethodSpec = Field(default_factory=KfMethod)
    forecast: ForecastSpec | None = None
    seed: int = Field(default=0, ge=0)
    output_dir: PathStr = "out"

    @model_validator(mode="before")
    @classmethod
    def merge_preset(cls, data: Any) -> Any:
        if not isinstance(data, Mapping) or not data.get("preset"):
            return data
        presets = load_presets()
        name = data["preset"]
        if name not in presets:
            raise ValueError(f"Unknown preset '{name}'; available: {sorted(presets)}")
        merged = _to_dict(DeepChainMap(dict(data), presets[name]))
        for key in ("dataset", "operator", "method"):
            ours, theirs = data.get(key), presets[name].get(key)
            if isinstance(ours, Mapping) and isinstance(theirs, Mapping):
                if ours.get("kind", theirs.get("kind")) != theirs.get("kind"):
                    merged[key] = _to_dict(ours)
        return merged

    @model_validator(mode="after")
    def check_compatibility(self) -> Self:
        if self.context >= self.K:
            raise ValueError(f"context={self.context} must be smaller than K={self.K}")
        kind, data = self.method.kind, self.dataset.kind
        if kind in SSM_ONLY_METHODS and data != "ssm":
            raise ValueError(f"method '{kind}' needs dataset 'ssm', got dataset '{data}'")
        if kind == "var3d" and data != "ns":
            raise ValueError(f"method 'var3d' needs a gridded dataset 'ns', got '{data}'")
        op_kind = self.operator.kind if self.operator else None
        if isinstance(self.method, (EnkfMethod, EnksMethod)) and self.method.localization:
            if data != "ns" or op_kind not in (None, "sparse_mask"):
                raise ValueError(
                    f"localized method '{kind}' needs dataset 'ns' with a sparse_mask operator, "
                    f"got dataset '{data}' with operator '{op_kind}'"
                )
        if isinstance(self.method, EnksMethod) and self.method.lag > self.K - 1:
            raise ValueError(f"enks lag={self.method.lag} exceeds K-1={self.K - 1}")
        if isinstance(self.method, ForcingDasMethod):
            den = self.method.denoiser
            if den.kind == "gaussian" and data != "ssm":
                raise ValueError(f"denoiser 'gaussian' needs dataset 'ssm', got '{data}'")
            if den.path is not None and not Path(den.path).is_dir():
                raise ValueError(f"denoiser path '{den.path}' does not exist")
            if den.n_levels is not None and den.n_levels > den.T_s:
                raise ValueError(f"denoiser n_levels={den.n_levels} exceeds T_s={den.T_s}")
            u = self.method.resolved_u()
            window = self.method.window_frames(self.K)
            if window < self.K and u == 0:
                raise ValueError(
                    f"regime 'fs' cannot slide a {window}-frame window over K={self.K} frames"
                )
            if window < self.K and self.context >= window:
                raise ValueError(f"context={self.context} must be smaller than window={window}")
        return self

    # ---------------------------------------------------------------------------------------------

    @property
    def output_path(self) -> Path:
        return Path(self.output_dir)

    @property
    def frame_shape(self) -> FrameShape:
        return self.dataset.frame_shape

    def ssm(self) -> LinearSSM:
        if not isinstance(self.dataset, SsmDatasetSpec):
            raise ConfigError(f"dataset '{self.dataset.kind}' is not a linear system", "dataset")
        return self.dataset.build(self.sigma_y)

    def build_operator(self) -> ObsOperator:
        spec = self.operator
        if spec is None:
            spec = LinearMatrixSpec() if self.dataset.kind == "ssm" else SparseMaskSpec(ratio=0.05)
        default = self.dataset.H if isinstance(self.dataset, SsmDatasetSpec) else None
        return spec.build(self.frame_shape, default_matrix=default)

    def observed_frames(self) -> list[int]:
        return list(range(0, self.K, self.obs_stride))

    def config_hash(self) -> str:
        """SHA-256 of the canonical JSON form (insensitive to key order in the source file)."""
        return sha256_hexdigest(json.dumps(self.model_dump(mode="json"), sort_keys=True))

    @classmethod
    def parse_file(cls, path: str | Path) -> Self:
        """Parse a YAML (`.yml`/`.yaml`) or JSON experiment file."""
        path = Path(path)
        if path.suffix in (".yml", ".yaml"):
            with open(path) as f:
                return cls.model_validate(yaml.safe_load(f) or {})
        return cls.model_validate_json(path.read_text())

    @classmethod
    def load_config(cls, path: str | Path | None = None) -> Self:
        """Load `path`, or the single `experiment.json|yaml|yml` found under the working dir."""
        if path is None:
            paths = find_paths(
                Path.cwd(),
                include_dirs=False,
                include_files=True,
                includes=[r".*/experiment\.(json|ya?ml)$"],
            )
            if len(paths) != 1:
                raise ConfigError(
                    f"Expected exactly one experiment config file, found {len(paths)}: {paths}",
                    "config",
                )
            path = paths[0]
        return cls.parse_file(path)


def _to_dict(value: Any) -> Any:
    if isinstance(value, Mapping):
        return {k: _to_dict(v) for k, v in value.items()}
    return value


@cache
def load_presets() -> dict[str, dict[str, Any]]:
    """Bundled named presets."""
    text = resources.files("unida.project").joinpath(PRESETS_RESOURCE).read_text()
    return yaml.safe_load(text)

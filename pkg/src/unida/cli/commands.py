"""Subcommand implementations.

Every command reads and writes artifacts below the experiment output directory::

    data/truth.fdt        evaluation trajectory [K, C, H, W]
    data/train.fdt        training trajectories [n, K, C, H, W]
    obs/obs.fdt           observations (operator and noise in the sidecar)
    denoiser/             trained affine denoiser (and PCA basis)
    assim/analysis.fdt    analysis trajectory (method diagnostics in the sidecar)
    assim/samples.fdt     all guided samples when n_samples > 1
    forecast/ensemble.fdt forecast ensemble [M, C + horizon, C, H, W]
    forecast/scores.csv   NRMSE and CRPS per lead time
    metrics/              metrics.csv and summary.json
    schedule.csv          scheduling matrix

Each command returns the files it read and wrote; `run_command` records them in the manifest.
"""

__all__ = [
    "RunContext",
    "CommandResult",
    "cmd_generate",
    "cmd_observe",
    "cmd_train",
    "cmd_assimilate",
    "cmd_forecast",
    "cmd_evaluate",
    "cmd_schedule_dump",
    "COMMANDS",
    "run_command",
]

import logging
import shutil
import sys
import time
from collections.abc import Callable
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

from unida.classical.ensemble import (
    EnsembleRun,
    Propagator,
    enkf_run,
    enks_run,
    ns_propagator,
    ssm_propagator,
)
from unida.classical.kalman import kalman_filter, rts_smoother
from unida.classical.variational import var3d, var4d_linear
from unida.common.errors import CapacityError, ConfigError
from unida.core.container import read_tensor, sidecar_path, write_sidecar, write_tensor
from unida.core.rng import RngStream
from unida.core.trajectory import Trajectory
from unida.denoise.affine import MANIFEST_NAME as AFFINE_MANIFEST_NAME
from unida.denoise.affine import AffineDenoiser, load_affine, save_affine
from unida.denoise.base import Denoiser
from unida.denoise.gaussian import gaussian_denoiser
from unida.denoise.training import train_denoiser
from unida.dynamics.linear import ssm_simulate, ssm_trajectory_prior
from unida.dynamics.navier_stokes import ns_generate, ns_initial_condition
from unida.metrics.report import MetricReport
from unida.observe.observations import ObservationSet, observe_trajectory
from unida.observe.projection import PcaBasis
from unida.project.config import (
    EnkfMethod,
    EnksMethod,
    ExperimentConfig,
    ForcingDasMethod,
    KfMethod,
    NsDatasetSpec,
    RtsMethod,
    Var3dMethod,
    Var4dMethod,
)
from unida.project.manifest import RunManifest
from unida.sampler.assimilate import (
    AssimilationResult,
    assimilate,
    assimilate_sliding,
    regime_schedule,
)
from unida.sampler.forecast import forecast, forecast_scores
from unida.sampler.guidance import GuidanceConfig
from unida.schedule.matrix import schedule_to_csv

logger = logging.getLogger(__name__)

# Stream ids below the master seed; one per stochastic stage.
STREAM_TRUTH = 1
STREAM_TRAIN = 2
STREAM_OBSERVE = 3
STREAM_TRAINING = 4
STREAM_ENSEMBLE_INIT = 5
STREAM_ASSIMILATE = 6
STREAM_FORECAST = 7

TRUTH_PATH = "data/truth.fdt"
TRAIN_PATH = "data/train.fdt"
OBS_PATH = "obs/obs.fdt"
DENOISER_DIR = "denoiser"
ANALYSIS_PATH = "assim/analysis.fdt"
SAMPLES_PATH = "assim/samples.fdt"
ENSEMBLE_PATH = "forecast/ensemble.fdt"
SCORES_PATH = "forecast/scores.csv"
METRICS_DIR = "metrics"
SCHEDULE_PATH = "schedule.csv"

# K * D of a dense affine denoiser.
MAX_AFFINE_DIM = 4096


@dataclass(frozen=True)
class RunContext:
    """Validated config plus run-level settings shared by all commands."""

    config: ExperimentConfig
    threads: int = 1

    @property
    def root(self) -> Path:
        return self.config.output_path

    @property
    def seed(self) -> int:
        return self.config.seed

    def path(self, relative: str) -> Path:
        return self.root / relative

    def require(self, relative: str) -> Path:
        """Path of an input artifact that an earlier command must have written."""
        path = self.path(relative)
        if not path.exists():
            raise ConfigError(f"Missing input {path}; run the command that produces it", relative)
        return path

    def rng(self, stream_id: int) -> RngStream:
        return RngStream(self.seed, stream_id)


@dataclass
class CommandResult:
    inputs: list[Path] = field(default_factory=list)
    outputs: list[Path] = field(default_factory=list)


def _forcingdas(config: ExperimentConfig, command: str) -> ForcingDasMethod:
    if not isinstance(config.method, ForcingDasMethod):
        raise ConfigError(
            f"'{command}' needs method 'forcingdas', got method '{config.method.kind}'",
            "method.kind",
        )
    return config.method


def _write_with_sidecar(path: Path, values, meta: dict[str, Any]) -> list[Path]:
    write_tensor(path, values)
    return [path, write_sidecar(path, meta)]


# -------------------------------------------------------------------------------------------------
# generate / observe
# -------------------------------------------------------------------------------------------------


def cmd_generate(ctx: RunContext) -> CommandResult:
    """Simulate the evaluation trajectory and the training trajectories."""
    config = ctx.config
    dataset = config.dataset
    n_total = 1 + dataset.n_train
    meta: dict[str, Any] = {"dataset": dataset.kind, "K": config.K}
    if isinstance(dataset, NsDatasetSpec):
        ns_cfg = dataset.ns.model_copy(update={"seed": config.seed})
        generated = ns_generate(ns_cfg, n_total, config.K, dataset.burn_in, ctx.threads)
        norm = dataset.normalization
        trajectories = [norm.normalize(traj.frames) for traj in generated.trajectories]
        meta.update(x_min=generated.x_min, x_max=generated.x_max, normalized=dataset.normalize)
    else:
        ssm = config.ssm()
        trajectories = []
        for i in range(n_total):
            rng = ctx.rng(STREAM_TRUTH) if i == 0 else ctx.rng(STREAM_TRAIN).spawn(i - 1)
            states, _ = ssm_simulate(ssm, config.K, rng)
            trajectories.append(Trajectory.from_states(states).frames)
    result = CommandResult()
    result.outputs += _write_with_sidecar(ctx.path(TRUTH_PATH), trajectories[0], meta)
    if dataset.n_train:
        result.outputs += _write_with_sidecar(
            ctx.path(TRAIN_PATH), np.stack(trajectories[1:]), {**meta, "n": dataset.n_train}
        )
    logger.info(f"Generated truth and {dataset.n_train} training trajectories in {ctx.root}")
    return result


def cmd_observe(ctx: RunContext) -> CommandResult:
    """Observe the evaluation trajectory through the configured operator."""
    config = ctx.config
    truth_path = ctx.require(TRUTH_PATH)
    truth = Trajectory(read_tensor(truth_path))
    frames = [k for k in config.observed_frames() if k < truth.K]
    obs = observe_trajectory(
        truth, config.build_operator(), config.sigma_y, ctx.rng(STREAM_OBSERVE), frames
    )
    path = obs.save(ctx.path(OBS_PATH))
    logger.info(f"Wrote {len(obs.frame_indices)} observed frames (M={obs.M}) to {path}")
    return CommandResult(inputs=[truth_path], outputs=[path, sidecar_path(path)])


# -------------------------------------------------------------------------------------------------
# denoisers
# -------------------------------------------------------------------------------------------------


def cmd_train(ctx: RunContext) -> CommandResult:
    """Train the affine denoiser (optionally in a PCA latent) on the training trajectories."""
    config = ctx.config
    method = _forcingdas(config, "train")
    spec = method.denoiser
    if spec.kind != "affine":
        logger.info(f"Denoiser '{spec.kind}' is exact; nothing to train")
        return CommandResult()
    train_path = ctx.require(TRAIN_PATH)
    data = read_tensor(train_path)
    states = data.reshape(*data.shape[:2], -1)
    directory = ctx.path(DENOISER_DIR)
    if directory.exists():
        shutil.rmtree(directory)
    if spec.pca_rank:
        basis = PcaBasis.fit(states.reshape(-1, states.shape[-1]), spec.pca_rank)
        basis.save(directory)
        states = basis.encode(states)
    window = method.window_frames(config.K)
    D = states.shape[-1]
    if window * D > MAX_AFFINE_DIM:
        raise CapacityError(
            f"Affine denoiser of dimension K*D={window * D} exceeds {MAX_AFFINE_DIM}; "
            "set method.denoiser.pca_rank or a shorter method.denoiser.window"
        )
    schedule = spec.schedule()
    model = AffineDenoiser(window, D, schedule, spec.causal, spec.n_levels)
    training = spec.training
    trained = train_denoiser(
        model,
        states,
        spec.cat,
        schedule,
        training.steps,
        training.lr,
        ctx.rng(STREAM_TRAINING),
        batch_size=training.batch_size,
        lr_decay=training.lr_decay,
        noise_clip=training.noise_clip,
    )
    save_affine(trained, directory)
    outputs = sorted(p for p in directory.iterdir() if p.is_file())
    return CommandResult(inputs=[train_path], outputs=outputs)


def _load_denoiser(
    ctx: RunContext, method: ForcingDasMethod
) -> tuple[Denoiser, PcaBasis | None, list[Path]]:
    spec = method.denoiser
    schedule = spec.schedule()
    window = method.window_frames(ctx.config.K)
    if spec.kind == "gaussian":
        prior = ssm_trajectory_prior(ctx.config.ssm(), window)
        return gaussian_denoiser(prior, schedule, spec.causal), None, []
    directory = Path(spec.path) if spec.path else ctx.path(DENOISER_DIR)
    if not (directory / AFFINE_MANIFEST_NAME).exists():
        raise ConfigError(
            f"No trained denoiser in {directory}; run 'unida train' first", "method.denoiser.path"
        )
    model = load_affine(directory, schedule)
    if model.K != window:
        raise ConfigError(
            f"Denoiser in {directory} has a {model.K}-frame window, the experiment needs {window}",
            "method.denoiser.window",
        )
    basis = PcaBasis.load(directory) if PcaBasis.exists(directory) else None
    inputs = sorted(p for p in directory.iterdir() if p.is_file())
    return model, basis, inputs


def _to_model_space(states: np.ndarray, basis: PcaBasis | None) -> np.ndarray:
    return states if basis is None else basis.encode(states)


def _to_frames(
    states: np.ndarray, basis: PcaBasis | None, frame_shape: tuple[int, ...]
) -> np.ndarray:
    """`[n, K, D']` model-space states back to `[n, K, C, H, W]` frames."""
    if basis is not None:
        states = basis.decode(states)
    return states.reshape(*states.shape[:2], *frame_shape)


# -------------------------------------------------------------------------------------------------
# assimilation
# -------------------------------------------------------------------------------------------------


@dataclass
class _Analysis:
    frames: np.ndarray
    diagnostics: dict[str, Any]
    samples: np.ndarray | None = None
    inputs: list[Path] = field(default_factory=list)


def _assimilate_forcingdas(
    ctx: RunContext, method: ForcingDasMethod, obs: ObservationSet
) -> _Analysis:
    config = ctx.config
    denoiser, basis, inputs = _load_denoiser(ctx, method)
    if basis is not None:
        obs = basis.project(obs)
    context = None
    if config.context:
        truth_path = ctx.require(TRUTH_PATH)
        inputs.append(truth_path)
        truth = Trajectory(read_tensor(truth_path))
        context = _to_model_space(truth.states[: config.context], basis)
    guidance = GuidanceConfig(
        zeta=method.zeta,
        gamma_guidance=method.gamma_guidance,
        sigma_y=obs.sigma_y,
        ddim_eta=method.ddim_eta,
    )
    rng = ctx.rng(STREAM_ASSIMILATE)
    result: AssimilationResult
    if denoiser.K < config.K:
        result = assimilate_sliding(
            denoiser, obs, config.K, method.resolved_u(), guidance, context, rng, method.n_samples
        )
    else:
        S = regime_schedule(
            method.regime, config.K, denoiser.schedule.T_s, method.u, config.context
        )
        result = assimilate(denoiser, obs, S, guidance, context, rng, method.n_samples)
    states = result.samples.reshape(method.n_samples, config.K, -1)
    samples = _to_frames(states, basis, config.frame_shape)
    diagnostics = {
        "loss": result.loss,
        "active_sizes": result.active_sizes,
        "warnings": result.warnings,
        "config": result.config,
        "n_samples": method.n_samples,
    }
    return _Analysis(samples.mean(axis=0), diagnostics, samples, inputs)


def _initial_ensemble(ctx: RunContext, method: EnkfMethod | EnksMethod) -> tuple[Propagator, Any]:
    config = ctx.config
    dataset = config.dataset
    rng = ctx.rng(STREAM_ENSEMBLE_INIT)
    N_e = method.n_ensemble
    if isinstance(dataset, NsDatasetSpec):
        ns_cfg = dataset.ns.model_copy(update={"seed": config.seed})
        norm = dataset.normalization
        fields = np.stack([ns_initial_condition(ns_cfg, rng.spawn(m)) for m in range(N_e)])
        members = norm.normalize(method.init_spread * fields[:, np.newaxis])
        return ns_propagator(ns_cfg, norm=norm), members.reshape(N_e, -1)
    ssm = config.ssm()
    z = rng.standard_normal((N_e, ssm.D))
    return ssm_propagator(ssm), ssm.mu0 + method.init_spread * z @ ssm.P0_root.T


def _assimilate_ensemble(
    ctx: RunContext, method: EnkfMethod | EnksMethod, obs: ObservationSet
) -> _Analysis:
    config = ctx.config
    propagate, ens0 = _initial_ensemble(ctx, method)
    rng = ctx.rng(STREAM_ASSIMILATE)
    run: EnsembleRun
    if isinstance(method, EnksMethod):
        run = enks_run(
            propagate, ens0, obs, config.K, method.lag, method.localization, method.inflation, rng
        )
    else:
        run = enkf_run(propagate, ens0, obs, config.K, method.localization, method.inflation, rng)
    return _Analysis(run.means.reshape(config.K, *config.frame_shape), run.diagnostics())


def _run_method(ctx: RunContext, obs: ObservationSet) -> _Analysis:
    config = ctx.config
    method = config.method
    if isinstance(method, ForcingDasMethod):
        return _assimilate_forcingdas(ctx, method, obs)
    if isinstance(method, (EnkfMethod, EnksMethod)):
        return _assimilate_ensemble(ctx, method, obs)
    if isinstance(method, Var3dMethod):
        var3d_result = var3d(obs, config.K, method.cvt)
        return _Analysis(var3d_result.frames, var3d_result.diagnostics())
    if isinstance(method, Var4dMethod):
        var4d_result = var4d_linear(config.ssm(), obs, config.K, method.window, method.sigma_b)
        return _Analysis(var4d_result.trajectory.frames, var4d_result.diagnostics())
    if isinstance(method, (KfMethod, RtsMethod)):
        run = kalman_filter if isinstance(method, KfMethod) else rts_smoother
        marginals = run(config.ssm(), obs, config.K)
        return _Analysis(marginals.trajectory().frames, {"std": marginals.std().tolist()})
    raise ConfigError(f"Unsupported method '{method.kind}'", "method.kind")


def cmd_assimilate(ctx: RunContext) -> CommandResult:
    """Run the configured assimilation method on the stored observations."""
    config = ctx.config
    obs_path = ctx.require(OBS_PATH)
    obs = ObservationSet.load(obs_path)
    analysis = _run_method(ctx, obs)
    result = CommandResult(inputs=[obs_path, sidecar_path(obs_path), *analysis.inputs])
    meta = {"method": config.method.kind, "K": config.K, "diagnostics": analysis.diagnostics}
    result.outputs += _write_with_sidecar(ctx.path(ANALYSIS_PATH), analysis.frames, meta)
    if analysis.samples is not None and analysis.samples.shape[0] > 1:
        write_tensor(ctx.path(SAMPLES_PATH), analysis.samples)
        result.outputs.append(ctx.path(SAMPLES_PATH))
    logger.info(f"Method '{config.method.kind}' analysis written to {ctx.path(ANALYSIS_PATH)}")
    return result


# -------------------------------------------------------------------------------------------------
# forecast / evaluate / schedule-dump
# -------------------------------------------------------------------------------------------------


def cmd_forecast(ctx: RunContext) -> CommandResult:
    """Free-running ensemble forecast from clean truth context frames."""
    config = ctx.config
    method = _forcingdas(config, "forecast")
    spec = config.forecast
    if spec is None:
        raise ConfigError("'forecast' needs a forecast section in the config", "forecast")
    truth_path = ctx.require(TRUTH_PATH)
    truth = Trajectory(read_tensor(truth_path))
    if spec.context > truth.K:
        raise ConfigError(
            f"forecast.context={spec.context} exceeds the {truth.K} stored truth frames",
            "forecast.context",
        )
    denoiser, basis, inputs = _load_denoiser(ctx, method)
    context = _to_model_space(truth.states[: spec.context], basis)
    ensemble = forecast(
        denoiser,
        context,
        spec.horizon,
        spec.n_members,
        ctx.rng(STREAM_FORECAST),
        ddim_eta=spec.ddim_eta,
    )
    total = spec.context + spec.horizon
    frames = _to_frames(ensemble.reshape(spec.n_members, total, -1), basis, config.frame_shape)
    frames[:, : spec.context] = truth.frames[: spec.context]
    result = CommandResult(inputs=[truth_path, *inputs])
    meta = {"context": spec.context, "horizon": spec.horizon, "n_members": spec.n_members}
    result.outputs += _write_with_sidecar(ctx.path(ENSEMBLE_PATH), frames, meta)
    if total <= truth.K:
        scores = forecast_scores(frames, truth.frames[:total], n_context=spec.context)
        scores_path = ctx.path(SCORES_PATH)
        scores.to_csv(scores_path, index=False, float_format="%.10g")
        result.outputs.append(scores_path)
    else:
        logger.warning(f"Forecast reaches frame {total - 1} beyond the truth; scores skipped")
    return result


def cmd_evaluate(ctx: RunContext) -> CommandResult:
    """Score the analysis and the forecast ensemble against the truth."""
    config = ctx.config
    truth_path = ctx.require(TRUTH_PATH)
    truth = read_tensor(truth_path)
    result = CommandResult(inputs=[truth_path])
    train_path = ctx.path(TRAIN_PATH)
    if train_path.exists():
        climatology = read_tensor(train_path).mean(axis=(0, 1))
        result.inputs.append(train_path)
    else:
        climatology = truth.mean(axis=0)
    thresholds = config.dataset.csi_thresholds
    spectra = isinstance(config.dataset, NsDatasetSpec)
    report = MetricReport()
    analysis_path = ctx.path(ANALYSIS_PATH)
    if analysis_path.exists():
        result.inputs.append(analysis_path)
        analysis = read_tensor(analysis_path)
        report.score(
            "analysis",
            analysis,
            truth,
            climatology=climatology,
            thresholds=thresholds,
            spectra=spectra,
        )
        samples_path = ctx.path(SAMPLES_PATH)
        if samples_path.exists():
            result.inputs.append(samples_path)
            report.score_ensemble("analysis", read_tensor(samples_path), truth)
    ensemble_path = ctx.path(ENSEMBLE_PATH)
    if ensemble_path.exists():
        result.inputs.append(ensemble_path)
        ensemble = read_tensor(ensemble_path)
        total = ensemble.shape[1]
        if total <= truth.shape[0]:
            reference = truth[:total]
            report.score(
                "forecast",
                ensemble.mean(axis=0),
                reference,
                climatology=climatology,
                thresholds=thresholds,
                spectra=spectra,
            )
            report.score_ensemble("forecast", ensemble, reference)
    if not len(report):
        raise ConfigError(
            "Nothing to evaluate; run 'unida assimilate' or 'unida forecast' first", "metrics"
        )
    result.outputs += list(report.write(ctx.path(METRICS_DIR)))
    return result


def cmd_schedule_dump(ctx: RunContext) -> CommandResult:
    """Write the scheduling matrix of the configured regime as CSV and print it."""
    config = ctx.config
    method = _forcingdas(config, "schedule-dump")
    S = regime_schedule(
        method.regime,
        method.window_frames(config.K),
        method.denoiser.T_s,
        method.u,
        config.context,
    )
    text = schedule_to_csv(S)
    path = ctx.path(SCHEDULE_PATH)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text)
    sys.stdout.write(text)
    return CommandResult(outputs=[path])


COMMANDS: dict[str, Callable[[RunContext], CommandResult]] = {
    "generate": cmd_generate,
    "observe": cmd_observe,
    "train": cmd_train,
    "assimilate": cmd_assimilate,
    "forecast": cmd_forecast,
    "evaluate": cmd_evaluate,
    "schedule-dump": cmd_schedule_dump,
}


def run_command(name: str, ctx: RunContext) -> RunManifest:
    """Run one subcommand and record it in `<output>/manifest.json`."""
    if name not in COMMANDS:
        raise ConfigError(f"Unknown command '{name}'; available: {sorted(COMMANDS)}", "command")
    start = time.perf_counter()
    result = COMMANDS[name](ctx)
    manifest = RunManifest(
        command=name,
        config_hash=ctx.config.config_hash(),
        seed=ctx.seed,
        wall_clock_seconds=round(time.perf_counter() - start, 3),
    )
    manifest.add_inputs(ctx.root, result.inputs).add_outputs(ctx.root, result.outputs)
    manifest.write(ctx.root)
    return manifest

"""Free-running probabilistic forecasting from clean context frames."""

__all__ = ["forecast", "forecast_scores"]

import logging

import numpy as np
import pandas as pd

from unida.common.errors import ShapeError, ValidationError
from unida.core.rng import RngStream
from unida.denoise.base import Denoiser
from unida.metrics.crps import crps
from unida.metrics.errors import nrmse
from unida.sampler.assimilate import AssimilationResult, regime_schedule, run_reverse
from unida.sampler.guidance import GuidanceConfig
from unida.schedule.matrix import Regime

logger = logging.getLogger(__name__)


def _as_context(context, D: int, n_members: int) -> np.ndarray:
    ctx = np.asarray(context, dtype=np.float64)
    if ctx.ndim >= 4:
        ctx = ctx.reshape(*ctx.shape[:-3], -1)
    if ctx.ndim == 2:
        ctx = np.broadcast_to(ctx, (n_members, *ctx.shape))
    if ctx.ndim != 3 or ctx.shape[0] != n_members or ctx.shape[1] == 0:
        raise ShapeError(f"Context must be non-empty [C, D] or [{n_members}, C, D]: {ctx.shape}")
    return np.array(ctx)


def forecast(
    denoiser: Denoiser,
    context,
    horizon: int,
    n_members: int,
    rng: RngStream | None = None,
    ddim_eta: float = 0.0,
    frame_shape: tuple[int, int, int] | None = None,
) -> np.ndarray:
    """Sample `n_members` forecasts of `horizon` frames past the clean `context`.

    Each window clamps the most recent min(C, K - 1) frames as context and runs the AR schedule
    without guidance; windows repeat until the horizon is covered.

    Args:
        denoiser (Denoiser): the trained denoiser (window of K frames).
        context: clean frames as states `[C, D]` (or `[C, C_ch, H, W]`), shared by all members,
            or per member `[M, C, D]`.
        horizon (int): number of frames to forecast (>= 0).
        n_members (int): ensemble size M.
        rng (RngStream): random stream; window w draws from `rng.spawn(w)`.
        ddim_eta (float): DDIM stochasticity.
        frame_shape: layout of returned frames; defaults to `(1, 1, D)`.

    Returns:
        np.ndarray: `[M, C + horizon, *frame_shape]`, the context followed by the forecast.
    """
    if horizon < 0 or n_members < 1:
        raise ValidationError(f"Need horizon >= 0 and n_members >= 1: {horizon}, {n_members}")
    rng = rng or RngStream(0)
    K, D, T = denoiser.K, denoiser.D, denoiser.schedule.T_s
    x = _as_context(context, D, n_members)
    C = x.shape[1]
    n_ctx = min(C, K - 1)
    if n_ctx < 1:
        raise ValidationError(f"Forecasting needs a window of K >= 2 frames, got K={K}")
    cfg = GuidanceConfig(ddim_eta=ddim_eta)
    S = regime_schedule(Regime.AR, K, T, n_context=n_ctx)
    window = 0
    out = [x]
    produced = 0
    while produced < horizon:
        history = np.concatenate(out, axis=1)[:, -n_ctx:]
        window_rng = rng.spawn(window)
        init = window_rng.standard_normal((n_members, K, D))
        init[:, :n_ctx] = history
        diag = AssimilationResult(samples=np.empty(0))
        states = run_reverse(denoiser, None, S, cfg, init, window_rng, diag)
        step = min(K - n_ctx, horizon - produced)
        out.append(states[:, n_ctx : n_ctx + step])
        produced += step
        window += 1
    ensemble = np.concatenate(out, axis=1)
    logger.info(f"Forecast {n_members} members over {horizon} frames in {window} windows")
    return ensemble.reshape(n_members, C + horizon, *(frame_shape or (1, 1, D)))


def forecast_scores(ensemble: np.ndarray, truth: np.ndarray, n_context: int = 0) -> pd.DataFrame:
    """Ensemble-mean NRMSE and CRPS per lead time.

    Args:
        ensemble (np.ndarray): `[M, K, C, H, W]` forecasts (context included).
        truth (np.ndarray): `[K, C, H, W]` reference.
        n_context (int): leading context frames excluded from scoring.

    Returns:
        pd.DataFrame: columns `lead`, `nrmse`, `crps`, one row per forecast frame (lead 1 first).
    """
    ensemble = np.asarray(ensemble, dtype=np.float64)
    truth = np.asarray(truth, dtype=np.float64)
    if ensemble.shape[1:] != truth.shape:
        raise ShapeError(f"Ensemble {ensemble.shape} does not match truth {truth.shape}")
    pred = ensemble[:, n_context:]
    ref = truth[n_context:]
    errors = nrmse(pred.mean(axis=0), ref)
    rows = [
        {"lead": k + 1, "nrmse": errors.per_frame[k], "crps": crps(pred[:, k], ref[k])}
        for k in range(ref.shape[0])
    ]
    return pd.DataFrame(rows, columns=["lead", "nrmse", "crps"])

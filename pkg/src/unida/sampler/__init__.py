from unida.sampler.assimilate import (
    AssimilationResult,
    assimilate,
    assimilate_sliding,
    regime_schedule,
)
from unida.sampler.ddim import ddim_sigma, ddim_step
from unida.sampler.forecast import forecast, forecast_scores
from unida.sampler.guidance import GuidanceConfig, guidance_weight, observation_loss

__all__ = [
    "AssimilationResult",
    "GuidanceConfig",
    "assimilate",
    "assimilate_sliding",
    "ddim_sigma",
    "ddim_step",
    "forecast",
    "forecast_scores",
    "guidance_weight",
    "observation_loss",
    "regime_schedule",
]

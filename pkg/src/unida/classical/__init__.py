from unida.classical.ensemble import (
    Ensemble,
    EnsembleRun,
    enkf_run,
    enks_run,
    free_run,
    ns_propagator,
    ssm_propagator,
)
from unida.classical.kalman import GaussianMarginals, kalman_filter, rts_smoother
from unida.classical.localization import LocalizationConfig, gaspari_cohn, gc_taper_matrix
from unida.classical.optimize import OptimizeResult, lbfgs_minimize
from unida.classical.variational import CvtConfig, var3d, var4d_linear

__all__ = [
    "CvtConfig",
    "Ensemble",
    "EnsembleRun",
    "GaussianMarginals",
    "LocalizationConfig",
    "OptimizeResult",
    "enkf_run",
    "enks_run",
    "free_run",
    "gaspari_cohn",
    "gc_taper_matrix",
    "kalman_filter",
    "lbfgs_minimize",
    "ns_propagator",
    "rts_smoother",
    "ssm_propagator",
    "var3d",
    "var4d_linear",
]

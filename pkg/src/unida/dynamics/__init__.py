from unida.dynamics.linear import LinearSSM, ssm_simulate, ssm_trajectory_prior
from unida.dynamics.navier_stokes import (
    NsConfig,
    NsDataset,
    ns_generate,
    ns_initial_condition,
    ns_propagate,
    ns_step,
)

__all__ = [
    "LinearSSM",
    "NsConfig",
    "NsDataset",
    "ns_generate",
    "ns_initial_condition",
    "ns_propagate",
    "ns_step",
    "ssm_simulate",
    "ssm_trajectory_prior",
]

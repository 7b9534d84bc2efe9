"""Unified data assimilation toolkit.

Per-frame-noise diffusion inference (scheduling matrices, noise-level-aware guidance,
causality-aware training) alongside classical baselines (Kalman filter/smoother, EnKF/EnKS,
3D-Var, 4D-Var), a stochastic Navier-Stokes generator and a forecast-verification metric suite.
"""

from unida._version import __version__

__all__ = ["__version__"]

import json
from pathlib import Path
from typing import Any

import numpy as np
from aibs_informatics_test_resources import BaseTest as _BaseTest
from aibs_informatics_test_resources import reset_environ_after_test as reset_environ_after_test

from unida.dynamics.linear import LinearSSM


def rotation_ssm(
    rho: float = 0.95, angle: float = 0.3, q: float = 0.05, r: float = 0.1, M: int = 2
) -> LinearSSM:
    """Two-dimensional damped rotation observed through the first `M` coordinates."""
    c, s = np.cos(angle), np.sin(angle)
    return LinearSSM(
        A=rho * np.array([[c, -s], [s, c]]),
        Q=q * np.eye(2),
        H=np.eye(2)[:M],
        R=r**2 * np.eye(M),
        mu0=np.array([1.0, -0.5]),
        P0=np.eye(2),
    )


class BaseTest(_BaseTest):
    def write_config(self, content: dict[str, Any], name: str = "experiment.json") -> Path:
        """Write an experiment config below a fresh temporary directory."""
        path = self.tmp_path() / name
        path.write_text(json.dumps(content))
        return path

"""Variational analyses: cycled 3D-Var with a control-variable transform, and linear 4D-Var.

3D-Var minimizes, per frame,

    J(v) = 1/2 ||v||^2 + 1/(2 sigma_y^2) ||y - A(x)||^2,   x = x_b + sigma_b * G v

where G applies a per-channel periodic Gaussian filter (unit L2 norm, so the implied background
variance is sigma_b^2 everywhere) through the FFT. Linear 4D-Var fits the initial state of each
window to all of the window's observations under the model x_k = A^k x_0.
"""

__all__ = [
    "CvtConfig",
    "CvtOperator",
    "Var3dResult",
    "Var4dResult",
    "var3d",
    "var3d_frame",
    "var4d_linear",
]

import logging
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
import scipy.sparse.linalg
from pydantic import BaseModel, ConfigDict, Field, field_validator

from unida.classical.optimize import OptimizeResult, lbfgs_minimize
from unida.common.errors import ConvergenceError, ShapeError, ValidationError
from unida.core.trajectory import Trajectory
from unida.dynamics.linear import LinearSSM
from unida.observe.observations import ObservationSet
from unida.observe.operators import ObsOperator

logger = logging.getLogger(__name__)


class CvtConfig(BaseModel):
    """Background model and optimizer budget for 3D-Var.

    Attributes:
        length_scales: Gaussian length scale per channel in grid points (one value broadcasts).
        sigma_b (float): background standard deviation.
        max_iter (int): L-BFGS outer iterations per frame.
        history (int): L-BFGS memory.
        max_linesearch (int): line-search evaluations per iteration.
        gtol (float): gradient-norm tolerance.
        passes (int): cycling passes; later passes resume each frame from the previous pass.
    """

    model_config = ConfigDict(frozen=True, extra="forbid")

    length_scales: tuple[float, ...] = (8.0, 6.0, 5.0, 5.0)
    sigma_b: float = Field(default=1.0, gt=0)
    max_iter: int = Field(default=80, ge=1)
    history: int = Field(default=50, ge=1)
    max_linesearch: int = Field(default=50, ge=1)
    gtol: float = Field(default=1e-8, gt=0)
    passes: int = Field(default=2, ge=1)

    @field_validator("length_scales")
    @classmethod
    def check_scales(cls, v: tuple[float, ...]) -> tuple[float, ...]:
        if not v or any(s <= 0 for s in v):
            raise ValueError(f"length scales must be positive, got {v}")
        return v

    def scales_for(self, n_channels: int) -> tuple[float, ...]:
        if len(self.length_scales) == 1:
            return self.length_scales * n_channels
        if len(self.length_scales) < n_channels:
            raise ValidationError(
                f"{len(self.length_scales)} length scales for {n_channels} channels"
            )
        return self.length_scales[:n_channels]


class CvtOperator:
    """The self-adjoint smoothing map G on flattened `[C, H, W]` frames."""

    def __init__(self, frame_shape: tuple[int, int, int], length_scales: tuple[float, ...]):
        self.frame_shape = frame_shape
        self.length_scales = length_scales

    @cached_property
    def spectra(self) -> np.ndarray:
        """Real `[C, H, W//2 + 1]` transfer functions of the unit-norm Gaussian kernels."""
        _, H, W = self.frame_shape
        dy = np.minimum(np.arange(H), H - np.arange(H))[:, np.newaxis]
        dx = np.minimum(np.arange(W), W - np.arange(W))[np.newaxis, :]
        out = []
        for ell in self.length_scales:
            kernel = np.exp(-(dx**2 + dy**2) / (2.0 * ell**2))
            kernel /= np.linalg.norm(kernel)
            out.append(np.fft.rfft2(kernel).real)
        return np.stack(out)

    def apply(self, v: np.ndarray) -> np.ndarray:
        C, H, W = self.frame_shape
        fields = v.reshape(C, H, W)
        out = np.fft.irfft2(np.fft.rfft2(fields) * self.spectra, s=(H, W))
        return out.ravel()

    adjoint = apply


@dataclass
class Var3dResult:
    """Analysis frames plus optimizer reports of the final pass."""

    frames: np.ndarray
    reports: list[OptimizeResult | None] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)

    @property
    def trajectory(self) -> Trajectory:
        return Trajectory(self.frames)

    def diagnostics(self) -> dict:
        return {
            "iterations": [r.n_iter if r else 0 for r in self.reports],
            "final_cost": [r.fun if r else None for r in self.reports],
            "warnings": self.warnings,
        }


def var3d_frame(
    y: np.ndarray,
    op: ObsOperator,
    sigma_y: float,
    background: np.ndarray,
    cvt: CvtConfig,
    initial: np.ndarray | None = None,
) -> tuple[np.ndarray, OptimizeResult]:
    """Single-frame analysis from background `[D]`; returns the analysis and optimizer report.

    `initial` is a starting control vector (zero by default).
    """
    G = CvtOperator(op.frame_shape, cvt.scales_for(op.frame_shape[0]))
    inv_var = 1.0 / sigma_y**2

    def cost(v: np.ndarray) -> tuple[float, np.ndarray]:
        x = background + cvt.sigma_b * G.apply(v)
        resid = op.apply_flat(x) - y
        value = 0.5 * float(v @ v) + 0.5 * inv_var * float(resid @ resid)
        grad = v + cvt.sigma_b * inv_var * G.adjoint(op.adjoint_flat(resid))
        return value, grad

    report = lbfgs_minimize(
        cost,
        np.zeros(op.state_dim) if initial is None else np.asarray(initial, dtype=np.float64),
        max_iter=cvt.max_iter,
        history=cvt.history,
        max_linesearch=cvt.max_linesearch,
        gtol=cvt.gtol,
    )
    return background + cvt.sigma_b * G.apply(report.x), report


def var3d(
    obs: ObservationSet,
    K: int,
    cvt: CvtConfig | None = None,
    background: np.ndarray | None = None,
) -> Var3dResult:
    """Cycled 3D-Var over K frames.

    Pass 1 starts from `background` (zero by default) and uses each analysis as the next frame's
    background; unobserved frames keep their background. Later passes keep frame 0 on
    `background`, take the previous pass's analysis of frame k - 1 as the background of frame k
    and resume each frame's minimization from the previous pass's control vector, so every
    observation enters its frame's cost exactly once.
    """
    cvt = cvt or CvtConfig()
    op = obs.operator
    D = op.state_dim
    by_frame = obs.by_frame()
    if any(k >= K for k in by_frame):
        raise ShapeError(f"Observations reach frame {max(by_frame)} beyond K={K}")
    x_b = np.zeros(D) if background is None else np.asarray(background, dtype=np.float64).ravel()
    if x_b.shape != (D,):
        raise ShapeError(f"Background must have {D} entries, got {x_b.shape}")
    result = Var3dResult(frames=np.empty(0))
    controls: list[np.ndarray | None] = [None] * K
    previous: np.ndarray | None = None
    for pass_index in range(cvt.passes):
        analyses = np.empty((K, D))
        reports: list[OptimizeResult | None] = []
        for k in range(K):
            if k == 0:
                current = x_b
            else:
                current = analyses[k - 1] if previous is None else previous[k - 1]
            y = by_frame.get(k)
            if y is None:
                analyses[k], report = current, None
            else:
                analyses[k], report = var3d_frame(
                    y, op, obs.sigma_y, current, cvt, initial=controls[k]
                )
                controls[k] = report.x
                if not report.converged and report.message == "line search failed":
                    result.warnings.append(f"pass {pass_index}, frame {k}: line search failed")
            reports.append(report)
        previous = analyses
        result.reports = reports
        logger.info(f"3D-Var pass {pass_index + 1}/{cvt.passes} over {K} frames finished")
    assert previous is not None
    result.frames = previous.reshape(K, *op.frame_shape)
    return result



@dataclass
class Var4dResult:
    states: np.ndarray
    residuals: list[float] = field(default_factory=list)
    iterations: list[int] = field(default_factory=list)

    @property
    def trajectory(self) -> Trajectory:
        return Trajectory.from_states(self.states)

    def diagnostics(self) -> dict:
        return {"residuals": self.residuals, "iterations": self.iterations}


def var4d_linear(
    ssm: LinearSSM,
    obs: ObservationSet,
    K: int,
    window: int,
    sigma_b: float = 1.0,
    tol: float = 1e-12,
    max_iter: int | None = None,
) -> Var4dResult:
    """Strong-constraint 4D-Var over consecutive windows of the linear model.

    Each window minimizes

        (1/2 sigma_b^2)||x_0 - x_b||^2 + (1/2 sigma_y^2) sum_k ||y_k - A(M^k x_0)||^2

    with conjugate gradients on the normal equations, the adjoint sweep running the transposed
    dynamics backwards. The first window's background is zero; later windows use the previous
    window's final state propagated one step.

    Raises:
        ConvergenceError: when conjugate gradients exhausts its budget.
    """
    if window < 1 or K < 1:
        raise ValidationError(f"Need K >= 1 and window >= 1, got K={K}, window={window}")
    op = obs.operator
    D = ssm.D
    if op.state_dim != D:
        raise ShapeError(f"Operator acts on dim {op.state_dim}, system has D={D}")
    by_frame = obs.by_frame()
    A = ssm.A
    inv_var_b, inv_var_y = 1.0 / sigma_b**2, 1.0 / obs.sigma_y**2
    states = np.empty((K, D))
    result = Var4dResult(states=states)
    x_b = np.zeros(D)
    for start in range(0, K, window):
        length = min(window, K - start)
        frames = [(j, by_frame[start + j]) for j in range(length) if start + j in by_frame]

        def adjoint_sweep(forcings: dict[int, np.ndarray]) -> np.ndarray:
            lam = np.zeros(D)
            for j in range(length - 1, -1, -1):
                lam = lam + forcings.get(j, 0.0)
                if j > 0:
                    lam = A.T @ lam
            return lam

        def hessian(dx: np.ndarray) -> np.ndarray:
            x, forcings = dx, {}
            for j in range(length):
                if j > 0:
                    x = A @ x
                if start + j in by_frame:
                    forcings[j] = inv_var_y * op.adjoint_flat(op.apply_flat(x))
            return inv_var_b * dx + adjoint_sweep(forcings)

        # gradient of the observation term at x_b, negated
        x, forcings = x_b, {}
        for j in range(length):
            if j > 0:
                x = A @ x
            if start + j in by_frame:
                forcings[j] = inv_var_y * op.adjoint_flat(by_frame[start + j] - op.apply_flat(x))
        rhs = adjoint_sweep(forcings)
        H = scipy.sparse.linalg.LinearOperator((D, D), matvec=hessian, dtype=np.float64)
        iterations = [0]

        def count(_):
            iterations[0] += 1

        delta, info = scipy.sparse.linalg.cg(
            H, rhs, rtol=tol, atol=0.0, maxiter=max_iter or 10 * D, callback=count
        )
        residual = float(np.linalg.norm(hessian(delta) - rhs))
        if info > 0:
            raise ConvergenceError(
                f"Conjugate gradients did not converge in window starting at frame {start}",
                residual,
            )
        x = x_b + delta
        for j in range(length):
            if j > 0:
                x = A @ x
            states[start + j] = x
        result.residuals.append(residual)
        result.iterations.append(iterations[0])
        logger.debug(f"4D-Var window at {start}: {len(frames)} observed, {iterations[0]} CG steps")
        x_b = A @ states[start + length - 1]
    return result

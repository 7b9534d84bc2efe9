"""Limited-memory BFGS with a strong-Wolfe line search.

The line search brackets a step satisfying the strong Wolfe conditions and refines it by
zooming with safeguarded cubic interpolation.
"""

__all__ = ["OptimizeResult", "lbfgs_minimize", "strong_wolfe"]

import logging
from collections import deque
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

logger = logging.getLogger(__name__)

Objective = Callable[[np.ndarray], tuple[float, np.ndarray]]


@dataclass
class OptimizeResult:
    """Outcome of `lbfgs_minimize`.

    Attributes:
        x (np.ndarray): best iterate.
        fun (float): objective at `x`.
        grad_norm (float): gradient norm at `x`.
        n_iter (int): completed iterations.
        n_eval (int): objective evaluations.
        converged (bool): gradient tolerance reached.
        message (str): termination reason.
        log (list[dict]): per-iteration `{iter, fun, grad_norm, step}`.
    """

    x: np.ndarray
    fun: float
    grad_norm: float
    n_iter: int
    n_eval: int
    converged: bool
    message: str
    log: list[dict] = field(default_factory=list)


def _cubic_minimizer(x1, f1, g1, x2, f2, g2, bounds=None) -> float:
    """Minimizer of the cubic through two points with slopes, clamped to `bounds`."""
    lo, hi = bounds if bounds is not None else (min(x1, x2), max(x1, x2))
    d1 = g1 + g2 - 3.0 * (f1 - f2) / (x1 - x2)
    d2_sq = d1 * d1 - g1 * g2
    if d2_sq < 0:
        return 0.5 * (lo + hi)
    d2 = np.sqrt(d2_sq)
    if x1 <= x2:
        pos = x2 - (x2 - x1) * ((g2 + d2 - d1) / (g2 - g1 + 2.0 * d2))
    else:
        pos = x1 - (x1 - x2) * ((g1 + d2 - d1) / (g1 - g2 + 2.0 * d2))
    if not np.isfinite(pos):
        return 0.5 * (lo + hi)
    return float(min(max(pos, lo), hi))


def strong_wolfe(
    fun: Objective,
    x: np.ndarray,
    f: float,
    g: np.ndarray,
    d: np.ndarray,
    step: float = 1.0,
    c1: float = 1e-4,
    c2: float = 0.9,
    max_steps: int = 50,
    tolerance_change: float = 1e-12,
) -> tuple[float, float, np.ndarray, int, bool]:
    """Search along `d` from `x` for a step meeting the strong Wolfe conditions.

    Returns:
        Tuple `(step, f_new, g_new, n_eval, success)`; on failure the best point found is
        returned with `success=False`.
    """
    gtd = float(g @ d)
    d_norm = float(np.abs(d).max())
    f_new, g_new = fun(x + step * d)
    n_eval = 1
    gtd_new = float(g_new @ d)
    t_prev, f_prev, g_prev, gtd_prev = 0.0, f, g, gtd
    done = False
    bracket: list[float]
    n_iter = 0
    while n_iter < max_steps:
        if f_new > f + c1 * step * gtd or (n_iter > 1 and f_new >= f_prev):
            bracket, bracket_f = [t_prev, step], [f_prev, f_new]
            bracket_g, bracket_gtd = [g_prev, g_new], [gtd_prev, gtd_new]
            break
        if abs(gtd_new) <= -c2 * gtd:
            bracket, bracket_f, bracket_g, bracket_gtd = [step], [f_new], [g_new], [gtd_new]
            done = True
            break
        if gtd_new >= 0:
            bracket, bracket_f = [t_prev, step], [f_prev, f_new]
            bracket_g, bracket_gtd = [g_prev, g_new], [gtd_prev, gtd_new]
            break
        previous = step
        step = _cubic_minimizer(
            t_prev, f_prev, gtd_prev, step, f_new, gtd_new,
            bounds=(step + 0.01 * (step - t_prev), step * 10.0),
        )
        t_prev, f_prev, g_prev, gtd_prev = previous, f_new, g_new, gtd_new
        f_new, g_new = fun(x + step * d)
        n_eval += 1
        gtd_new = float(g_new @ d)
        n_iter += 1
    else:
        bracket, bracket_f = [0.0, step], [f, f_new]
        bracket_g, bracket_gtd = [g, g_new], [gtd, gtd_new]

    insufficient = False
    low, high = (0, 1) if bracket_f[0] <= bracket_f[-1] else (1, 0)
    while not done and n_iter < max_steps:
        if abs(bracket[1] - bracket[0]) * d_norm < tolerance_change:
            break
        step = _cubic_minimizer(
            bracket[0], bracket_f[0], bracket_gtd[0], bracket[1], bracket_f[1], bracket_gtd[1]
        )
        lo, hi = min(bracket), max(bracket)
        eps = 0.1 * (hi - lo)
        if min(hi - step, step - lo) < eps:
            if insufficient or step >= hi or step <= lo:
                step = hi - eps if abs(step - hi) < abs(step - lo) else lo + eps
                insufficient = False
            else:
                insufficient = True
        else:
            insufficient = False
        f_new, g_new = fun(x + step * d)
        n_eval += 1
        gtd_new = float(g_new @ d)
        n_iter += 1
        if f_new > f + c1 * step * gtd or f_new >= bracket_f[low]:
            bracket[high], bracket_f[high] = step, f_new
            bracket_g[high], bracket_gtd[high] = g_new, gtd_new
            low, high = (0, 1) if bracket_f[0] <= bracket_f[1] else (1, 0)
        else:
            if abs(gtd_new) <= -c2 * gtd:
                done = True
            elif gtd_new * (bracket[high] - bracket[low]) >= 0:
                bracket[high], bracket_f[high] = bracket[low], bracket_f[low]
                bracket_g[high], bracket_gtd[high] = bracket_g[low], bracket_gtd[low]
            bracket[low], bracket_f[low] = step, f_new
            bracket_g[low], bracket_gtd[low] = g_new, gtd_new
    if len(bracket) == 1:
        low = 0
    return bracket[low], bracket_f[low], bracket_g[low], n_eval, done


def lbfgs_minimize(
    fun: Objective,
    x0: np.ndarray,
    max_iter: int = 80,
    history: int = 50,
    max_linesearch: int = 50,
    gtol: float = 1e-8,
    ftol: float = 0.0,
) -> OptimizeResult:
    """Minimize `fun` (returning value and gradient) from `x0`.

    Line-search failures end the run with a warning and return the best iterate.

    Args:
        fun: objective returning `(f, grad)`.
        x0: starting point.
        max_iter (int): outer iterations.
        history (int): stored curvature pairs (>= dimension gives full-memory BFGS steps).
        max_linesearch (int): evaluations per line search.
        gtol (float): stop when the gradient norm falls below this.
        ftol (float): stop when the relative decrease of f falls below this.
    """
    x = np.asarray(x0, dtype=np.float64).copy()
    f, g = fun(x)
    n_eval = 1
    pairs: deque[tuple[np.ndarray, np.ndarray, float]] = deque(maxlen=max(1, history))
    log: list[dict] = []
    message = "maximum iterations reached"
    converged = False
    n_iter = 0
    for n_iter in range(1, max_iter + 1):
        grad_norm = float(np.linalg.norm(g))
        if grad_norm <= gtol:
            converged, message, n_iter = True, "gradient tolerance reached", n_iter - 1
            break
        # two-loop recursion
        q = g.copy()
        alphas = []
        for s, y, rho in reversed(pairs):
            a = rho * float(s @ q)
            alphas.append(a)
            q -= a * y
        if pairs:
            s, y, _ = pairs[-1]
            q *= float(s @ y) / float(y @ y)
        for (s, y, rho), a in zip(pairs, reversed(alphas)):
            q += (a - rho * float(y @ q)) * s
        d = -q
        if float(g @ d) >= 0:
            pairs.clear()
            d = -g
        step0 = min(1.0, 1.0 / float(np.abs(g).sum())) if not pairs else 1.0
        step, f_new, g_new, evals, ok = strong_wolfe(
            fun, x, f, g, d, step=step0, max_steps=max_linesearch
        )
        n_eval += evals
        if not ok and f_new >= f:
            message = "line search failed"
            logger.warning(f"L-BFGS line search failed at iteration {n_iter}; keeping best point")
            n_iter -= 1
            break
        s = step * d
        y = g_new - g
        sy = float(s @ y)
        if sy > 1e-12 * float(np.linalg.norm(s)) * float(np.linalg.norm(y)):
            pairs.append((s, y, 1.0 / sy))
        x = x + s
        f_prev, f, g = f, f_new, g_new
        log.append({"iter": n_iter, "fun": f, "grad_norm": float(np.linalg.norm(g)), "step": step})
        logger.debug(f"L-BFGS iteration {n_iter}: f={f:.8g}, |g|={log[-1]['grad_norm']:.3e}")
        if ftol > 0 and (f_prev - f) <= ftol * max(abs(f_prev), abs(f), 1.0):
            message = "function tolerance reached"
            converged = True
            break
    else:
        if float(np.linalg.norm(g)) <= gtol:
            converged, message = True, "gradient tolerance reached"
    return OptimizeResult(
        x=x,
        fun=float(f),
        grad_norm=float(np.linalg.norm(g)),
        n_iter=n_iter,
        n_eval=n_eval,
        converged=converged,
        message=message,
        log=log,
    )

"""Quasi-Newton maximization with analytic gradients.

A small dense BFGS ascent with Armijo backtracking, sized for the 3-D
posterior surfaces this package optimizes. Written against a callable that
returns (value, gradient) so callers pay for one evaluation per point.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

__all__ = ["MaximizeResult", "maximize"]

_ARMIJO_C1 = 1e-4
_BACKTRACK = 0.5
_MAX_BACKTRACKS = 40


@dataclass(frozen=True)
class MaximizeResult:
    x: np.ndarray
    value: float
    grad_norm: float
    iterations: int
    converged: bool


def maximize(
    value_and_grad: Callable[[np.ndarray], tuple[float, np.ndarray]],
    x0: np.ndarray,
    grad_tol: float = 1e-6,
    max_iter: int = 200,
) -> MaximizeResult:
    """Ascend value_and_grad from x0 until the gradient norm drops below grad_tol.

    Uses a BFGS approximation of the inverse Hessian, reset to identity when
    the curvature condition fails, and an Armijo backtracking line search.
    Returns the best point seen even when not converged.
    """
    x = np.asarray(x0, dtype=float).copy()
    f, g = value_and_grad(x)
    n = x.size
    h_inv = np.eye(n)
    best_x, best_f, best_g = x.copy(), f, g.copy()

    for it in range(1, max_iter + 1):
        gnorm = float(np.linalg.norm(g))
        if gnorm < grad_tol:
            return MaximizeResult(x, f, gnorm, it - 1, True)

        direction = h_inv @ g
        slope = float(g @ direction)
        if slope <= 0.0:
            # stale curvature information; fall back to steepest ascent
            h_inv = np.eye(n)
            direction = g.copy()
            slope = float(g @ direction)

        step = 1.0
        for _ in range(_MAX_BACKTRACKS):
            x_new = x + step * direction
            f_new, g_new = value_and_grad(x_new)
            if np.isfinite(f_new) and f_new >= f + _ARMIJO_C1 * step * slope:
                break
            step *= _BACKTRACK
        else:
            # no acceptable step: local surface exhausted at this precision
            gnorm = float(np.linalg.norm(g))
            return MaximizeResult(best_x, best_f, float(np.linalg.norm(best_g)), it, gnorm < grad_tol)

        s = x_new - x
        y = g_new - g  # note: gradient of an ascent problem
        x, f, g = x_new, f_new, g_new
        if f > best_f:
            best_x, best_f, best_g = x.copy(), f, g.copy()

        # BFGS update on the inverse Hessian of -value; sign conventions fold
        # into using (s, -y) for the usual descent formulas, equivalent to the
        # form below with curvature s @ (-y) > 0 <=> s @ y < 0 for ascent.
        sy = float(s @ (-y))
        if sy > 1e-12 * float(np.linalg.norm(s)) * float(np.linalg.norm(y) + 1e-300):
            rho = 1.0 / sy
            sv = s.reshape(-1, 1)
            yv = (-y).reshape(-1, 1)
            eye = np.eye(n)
            left = eye - rho * (sv @ yv.T)
            h_inv = left @ h_inv @ left.T + rho * (sv @ sv.T)
        else:
            h_inv = np.eye(n)

    gnorm = float(np.linalg.norm(g))
    return MaximizeResult(best_x, best_f, float(np.linalg.norm(best_g)), max_iter, gnorm < grad_tol)

"""Small bounded Levenberg-Marquardt solver with a central-difference Jacobian."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np


@dataclass
class LSQResult:
    x: np.ndarray
    cost: float
    iterations: int
    converged: bool


def numeric_jacobian(fun: Callable, x: np.ndarray, scale: np.ndarray, rel_step: float = 1e-6) -> np.ndarray:
    h = rel_step * np.maximum(np.abs(x), scale)
    cols = []
    for j in range(x.size):
        e = np.zeros_like(x)
        e[j] = h[j]
        cols.append((fun(x + e) - fun(x - e)) / (2 * h[j]))
    return np.column_stack(cols)


def levenberg_marquardt(
    fun: Callable[[np.ndarray], np.ndarray],
    x0,
    scale,
    lower=None,
    upper=None,
    max_iter: int = 500,
    xtol: float = 1e-8,
) -> LSQResult:
    """Minimize ``sum(fun(x)**2)`` by damped Gauss-Newton.

    Damping follows Marquardt's diagonal scaling with Nielsen's update rule;
    bounds are enforced by projecting each trial point. ``converged`` is set
    once an accepted step changes every parameter by less than ``xtol``
    relative to ``max(|x_j|, scale_j)``.
    ``scale`` gives the typical magnitude of each parameter and sets the
    finite-difference step for parameters near zero.
    """
    x = np.asarray(x0, dtype=float).copy()
    scale = np.asarray(scale, dtype=float)
    lo = np.full_like(x, -np.inf) if lower is None else np.asarray(lower, dtype=float)
    hi = np.full_like(x, np.inf) if upper is None else np.asarray(upper, dtype=float)
    x = np.clip(x, lo, hi)
    r = fun(x)
    cost = float(r @ r)
    mu = None
    nu = 2.0
    jac = None
    it = 0
    while it < max_iter:
        it += 1
        if jac is None:
            jac = numeric_jacobian(fun, x, scale)
            a = jac.T @ jac
            g = jac.T @ r
            d = np.maximum(np.diag(a), 1e-30 * max(np.max(np.diag(a)), 1e-300))
        if mu is None:
            mu = 1e-3
        if not np.all(np.isfinite(a)) or not np.any(g):
            return LSQResult(x, cost, it, bool(np.all(np.isfinite(x))))
        try:
            step = np.linalg.solve(a + mu * np.diag(d), -g)
        except np.linalg.LinAlgError:
            mu *= nu
            nu *= 2
            continue
        x_new = np.clip(x + step, lo, hi)
        h = x_new - x
        r_new = fun(x_new)
        cost_new = float(r_new @ r_new)
        lin = r + jac @ h
        predicted = cost - float(lin @ lin)
        small = np.max(np.abs(h) / np.maximum(np.abs(x), scale)) <= xtol
        if np.isfinite(cost_new) and cost_new <= cost:
            rho = (cost - cost_new) / predicted if predicted > 0 else 0.0
            x, r, cost = x_new, r_new, cost_new
            jac = None
            mu *= max(1 / 3, 1 - (2 * rho - 1) ** 3)
            nu = 2.0
            if small:
                return LSQResult(x, cost, it, True)
        else:
            mu *= nu
            nu *= 2
            if mu > 1e30:
                break
    return LSQResult(x, cost, it, False)

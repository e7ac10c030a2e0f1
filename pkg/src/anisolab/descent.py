"""Projected first-order descent for convex grid energies.

One engine serves every minimization in the package: monotone descent
with Barzilai-Borwein step proposals safeguarded by Armijo backtracking
(so the objective never increases), projection onto box/equality
constraints after every trial step, and a stopping rule on the relative
objective decrease over a trailing window.  Nonsmooth kinks are handled
by the subgradient selection built into the energy's gradient callback.

Energies with degenerate curvature (power growth below 2 flattens out at
zero gradient) accept a diagonal preconditioner callback; the direction
becomes g / D, which is still a descent direction for positive D, and
the step proposal is the BB quotient in the D-metric.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = ["DescentResult", "IterationCapError", "minimize_projected"]


class IterationCapError(RuntimeError):
    def __init__(self, message, result):
        super().__init__(message)
        self.result = result


@dataclass
class DescentResult:
    u: np.ndarray
    objective: float
    iterations: int
    converged: bool
    rel_decrease: float


def minimize_projected(
    energy,
    gradient,
    project,
    u0,
    rel_tol=1e-8,
    window=50,
    max_iter=100_000,
    armijo=1e-4,
    max_backtracks=60,
    precond=None,
    precond_every=25,
):
    """Minimize a convex energy over the projected feasible set.

    ``project`` must be idempotent and is applied to the start point and
    every trial point.  ``precond``, when given, maps the current iterate
    to a positive node array D; it is refreshed every ``precond_every``
    accepted steps.  Convergence is declared when the objective drops by
    less than ``rel_tol`` (relative) over ``window`` iterations; running
    past ``max_iter`` raises :class:`IterationCapError` with the partial
    result attached.
    """
    u = project(np.array(u0, dtype=float, copy=True))
    e = energy(u)
    g = gradient(u)
    diag = precond(u) if precond is not None else None
    direction = g / diag if diag is not None else g
    step = 1.0 / max(float(np.sqrt(np.vdot(direction, direction).real)), 1.0)
    history = [e]
    for it in range(1, max_iter + 1):
        moved = False
        alpha = step
        for _ in range(max_backtracks):
            cand = project(u - alpha * direction)
            d = u - cand
            decrease = float(np.vdot(g, d).real)
            if decrease <= 0.0:
                break
            e_cand = energy(cand)
            if e_cand <= e - armijo * decrease:
                moved = True
                break
            alpha *= 0.5
        if not moved:
            return DescentResult(u=u, objective=e, iterations=it, converged=True, rel_decrease=0.0)
        g_cand = gradient(cand)
        s = cand - u
        y = g_cand - g
        sy = float(np.vdot(s, y).real)
        if sy > 0.0:
            metric = diag if diag is not None else 1.0
            step = float(np.vdot(s, metric * s).real) / sy
        else:
            step = alpha * 2.0
        # cap growth relative to the accepted step: unbounded BB proposals on
        # degenerate energies would burn the whole backtracking budget
        step = float(np.clip(step, 1e-14, max(1e6 * alpha, 1e-14)))
        u, e, g = cand, e_cand, g_cand
        if precond is not None and it % precond_every == 0:
            diag = precond(u)
        direction = g / diag if diag is not None else g
        history.append(e)
        if len(history) > window:
            prev = history[-window - 1]
            rel = (prev - e) / max(abs(e), 1e-300)
            if rel < rel_tol:
                return DescentResult(
                    u=u, objective=e, iterations=it, converged=True, rel_decrease=float(rel)
                )
    result = DescentResult(
        u=u,
        objective=e,
        iterations=max_iter,
        converged=False,
        rel_decrease=float((history[-window - 1] - e) / max(abs(e), 1e-300))
        if len(history) > window
        else np.inf,
    )
    raise IterationCapError(f"no convergence within {max_iter} iterations", result)

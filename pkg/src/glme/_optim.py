"""Seeded Nelder-Mead minimizer used by every fitting routine.

Derivative-free search is the right tool here: the objectives are cheap,
low-dimensional (2-3 parameters) and non-smooth at distribution support
boundaries, where they are scored with a large finite sentinel rather than
an exception.  The implementation is deterministic given its seed,
including the jittered restarts.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = ["OptimResult", "nelder_mead"]


@dataclass
class OptimResult:
    x: np.ndarray
    fun: float
    n_eval: int
    converged: bool


def _diameter(simplex: np.ndarray, best: np.ndarray) -> float:
    """Largest coordinate spread of the simplex, relative to the best vertex."""
    spread = simplex.max(axis=0) - simplex.min(axis=0)
    return float(np.max(spread / (1.0 + np.abs(best))))


def _run(fn, x0, scale, tol, max_evals, f_target):
    dim = x0.size
    simplex = np.tile(x0, (dim + 1, 1))
    for j in range(dim):
        simplex[j + 1, j] += scale[j]
    values = np.array([fn(v) for v in simplex])
    n_eval = dim + 1

    while n_eval < max_evals:
        order = np.argsort(values, kind="stable")
        simplex = simplex[order]
        values = values[order]

        if f_target is not None and values[0] <= f_target:
            return OptimResult(simplex[0], values[0], n_eval, True)
        if _diameter(simplex, simplex[0]) < tol:
            return OptimResult(simplex[0], values[0], n_eval, True)

        centroid = simplex[:-1].mean(axis=0)
        worst = simplex[-1]

        reflected = centroid + (centroid - worst)
        f_r = fn(reflected)
        n_eval += 1
        if values[0] <= f_r < values[-2]:
            simplex[-1], values[-1] = reflected, f_r
            continue

        if f_r < values[0]:
            expanded = centroid + 2.0 * (centroid - worst)
            f_e = fn(expanded)
            n_eval += 1
            if f_e < f_r:
                simplex[-1], values[-1] = expanded, f_e
            else:
                simplex[-1], values[-1] = reflected, f_r
            continue

        if f_r < values[-1]:
            contracted = centroid + 0.5 * (reflected - centroid)
            f_c = fn(contracted)
            n_eval += 1
            if f_c <= f_r:
                simplex[-1], values[-1] = contracted, f_c
                continue
        else:
            contracted = centroid + 0.5 * (worst - centroid)
            f_c = fn(contracted)
            n_eval += 1
            if f_c < values[-1]:
                simplex[-1], values[-1] = contracted, f_c
                continue

        # shrink toward the best vertex
        for i in range(1, dim + 1):
            simplex[i] = simplex[0] + 0.5 * (simplex[i] - simplex[0])
            values[i] = fn(simplex[i])
        n_eval += dim

    order = np.argsort(values, kind="stable")
    return OptimResult(simplex[order[0]], values[order[0]], n_eval, False)


def nelder_mead(
    fn,
    x0,
    scale,
    tol: float = 1e-8,
    max_evals: int = 5000,
    restarts: int = 3,
    jitter: float = 0.05,
    seed: int = 0,
    f_target: float | None = None,
) -> OptimResult:
    """Minimize ``fn`` from ``x0`` with jittered restarts.

    Parameters
    ----------
    fn : callable
        Objective mapping a 1-D array to a float; may return a large
        sentinel for infeasible points but never raise.
    x0 : array_like
        Starting point.
    scale : array_like
        Per-coordinate edge lengths of the initial simplex.
    tol : float
        Relative simplex-diameter stopping tolerance.
    max_evals : int
        Evaluation budget per restart.
    restarts : int
        Additional runs started from the incumbent best point, displaced
        by ``jitter * scale`` (seeded, hence reproducible).
    f_target : float, optional
        Stop as soon as the best value reaches this level.
    """
    x0 = np.asarray(x0, dtype=float)
    scale = np.broadcast_to(np.asarray(scale, dtype=float), x0.shape).copy()
    if np.any(scale <= 0):
        raise ValueError("simplex scale must be positive")

    best = _run(fn, x0, scale, tol, max_evals, f_target)
    total = best.n_eval
    rng = np.random.default_rng(seed)
    for _ in range(restarts):
        if f_target is not None and best.fun <= f_target:
            break
        start = best.x + jitter * scale * rng.uniform(-1.0, 1.0, size=x0.size)
        result = _run(fn, start, scale, tol, max_evals, f_target)
        total += result.n_eval
        if result.fun < best.fun or (result.fun == best.fun and result.converged):
            best = OptimResult(result.x, result.fun, total, result.converged)
    return OptimResult(best.x, best.fun, total, best.converged)

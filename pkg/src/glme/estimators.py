"""Stationary GEV fitting.

Four estimators share one interface:

* ``fit_lme``: classic L-moment matching, solved by inverting the
  L-skewness relation for the shape, then recovering scale and location in
  closed form.
* ``fit_mle``: minimizes the negative log-likelihood by Nelder-Mead.
* ``fit_gmle``: likelihood plus a penalty on the shape.
* ``fit_glme``: minimizes a quadratic L-moment distance, weighted by the
  bootstrap covariance of the sample L-moments and interpreted through a
  trivariate-normal approximation, plus a weighted penalty on the shape.

``profile_xi`` produces profile curves of any of these objectives over a
shape grid, maximized over location and scale.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gamma as gamma_fn

from ._optim import nelder_mead
from .errors import ConvergenceError, DegenerateDataError
from .gev import XI_EPS, GevParams
from .lmoments import (
    EULER_GAMMA,
    CovMatrix3,
    LMomentTriple,
    gev_population_lmoments,
    gld,
    lmoment_cov,
    sample_lmoments,
)
from .penalties import SENTINEL, AdaptiveBetaRequest, FlatPenalty

__all__ = [
    "FitResult",
    "ProfilePoint",
    "fit_lme",
    "fit_mle",
    "fit_gmle",
    "fit_glme",
    "gev_neg_loglik",
    "glme_objective",
    "profile_xi",
]

_LOG2 = math.log(2.0)
_LOG3 = math.log(3.0)

# shape search box shared by all optimizing estimators; L-moments and return
# levels exist for xi > -1, and fitted shapes are kept inside (-1, 1)
_XI_LO, _XI_HI = -1.0 + 1e-8, 1.0 - 1e-8


@dataclass(frozen=True)
class FitResult:
    """Outcome of a stationary fit."""

    params: GevParams
    method: str
    objective_value: float
    converged: bool
    iterations: int
    penalty: object
    alpha_n: float = 1.0


@dataclass(frozen=True)
class ProfilePoint:
    xi: float
    value: float
    converged: bool


def _tau3(xi: float) -> float:
    """L-skewness of a GEV as a function of the shape; strictly decreasing."""
    if abs(xi) < XI_EPS:
        return 2.0 * _LOG3 / _LOG2 - 3.0
    return 2.0 * math.expm1(-xi * _LOG3) / math.expm1(-xi * _LOG2) - 3.0


def _invert_t3(t3: float) -> tuple[float, int]:
    """Solve tau3(xi) = t3 on the shape box; returns (xi, iterations)."""
    a, b = _XI_LO, _XI_HI
    fa, fb = _tau3(a) - t3, _tau3(b) - t3
    if fa <= 0 or fb >= 0:
        raise ValueError(
            f"sample L-skewness {t3:.6g} outside the range ({_tau3(b):.6g}, {_tau3(a):.6g}) "
            "attainable for shape in (-1, 1)"
        )
    iters = 0

    # rational first guess, then bisection down to a narrow bracket
    z = 2.0 / (3.0 + t3) - _LOG2 / _LOG3
    xi = 7.8590 * z + 2.9554 * z * z
    if not a < xi < b:
        xi = 0.5 * (a + b)
    while b - a > 1e-6:
        f = _tau3(xi) - t3
        iters += 1
        if f == 0.0:
            return xi, iters
        if f > 0:
            a = xi
        else:
            b = xi
        xi = 0.5 * (a + b)

    # secant refinement inside the bracket
    x0, x1 = a, b
    f0, f1 = _tau3(x0) - t3, _tau3(x1) - t3
    for _ in range(100):
        if abs(f1) < 1e-12:
            return x1, iters
        step_ok = f1 != f0
        x2 = x1 - f1 * (x1 - x0) / (f1 - f0) if step_ok else 0.5 * (a + b)
        if not a <= x2 <= b:
            x2 = 0.5 * (a + b)
        f2 = _tau3(x2) - t3
        iters += 1
        if f2 > 0:
            a = x2
        else:
            b = x2
        x0, f0, x1, f1 = x1, f1, x2, f2
    if abs(f1) < 1e-12:
        return x1, iters
    raise ValueError(f"L-skewness inversion did not reach tolerance at t3={t3:.6g}")


def _params_from_lmoments(l: LMomentTriple) -> tuple[GevParams, int, float]:
    xi, iters = _invert_t3(l.t3)
    if abs(xi) < XI_EPS:
        sigma = l.l2 / _LOG2
        mu = l.l1 - sigma * EULER_GAMMA
        xi = 0.0
    else:
        g = gamma_fn(1.0 + xi)
        sigma = l.l2 * xi / (-math.expm1(-xi * _LOG2) * g)
        mu = l.l1 - sigma * (1.0 - g) / xi
    residual = abs(_tau3(xi) - l.t3)
    return GevParams(mu, sigma, xi), iters, residual


def _check_sample(x, min_n: int) -> np.ndarray:
    arr = np.asarray(x, dtype=float)
    if arr.ndim != 1:
        raise ValueError("x must be one-dimensional")
    if not np.all(np.isfinite(arr)):
        raise ValueError("x must be finite")
    if arr.size < min_n:
        raise ValueError(f"need at least {min_n} observations, got {arr.size}")
    if np.ptp(arr) == 0:
        raise DegenerateDataError("sample is constant")
    return arr


def fit_lme(x) -> FitResult:
    """L-moment estimate: population L-moments equal the sample ones."""
    arr = _check_sample(x, 5)
    l = sample_lmoments(arr)
    params, iters, residual = _params_from_lmoments(l)
    return FitResult(params, "lme", residual, True, iters, FlatPenalty())


def gev_neg_loglik(x: np.ndarray, mu: float, sigma: float, xi: float) -> float:
    """Negative log-likelihood; a large sentinel outside the feasible region."""
    if sigma <= 0:
        return SENTINEL
    z = (np.asarray(x, dtype=float) - mu) / sigma
    n = z.size
    if abs(xi) < XI_EPS:
        with np.errstate(over="ignore"):
            val = n * math.log(sigma) + np.sum(z) + np.sum(np.exp(-z))
    else:
        u = 1.0 - xi * z
        if np.any(u <= 0):
            return SENTINEL
        lu = np.log(u)
        with np.errstate(over="ignore"):
            val = n * math.log(sigma) + (1.0 - 1.0 / xi) * np.sum(lu) + np.sum(np.exp(lu / xi))
    return float(val) if math.isfinite(val) else SENTINEL


def _default_init(arr: np.ndarray) -> GevParams:
    try:
        return fit_lme(arr).params
    except ValueError:
        # L-skewness out of range; start from the Gumbel moment fit
        l = sample_lmoments(arr)
        sigma = max(l.l2 / _LOG2, 1e-12)
        return GevParams(l.l1 - sigma * EULER_GAMMA, sigma, 0.0)


def _simplex_scale(init: GevParams) -> np.ndarray:
    return np.array([0.1 * abs(init.mu) + 1.0, 0.1 * init.sigma, 0.05])


def _optimize_theta(objective, init: GevParams, method: str, penalty, alpha_n, seed) -> FitResult:
    def boxed(theta):
        mu, sigma, xi = theta
        if sigma <= 0 or not _XI_LO < xi < _XI_HI:
            return SENTINEL
        return objective(mu, sigma, xi)

    res = nelder_mead(boxed, np.array(init.as_tuple()), _simplex_scale(init), seed=seed)
    result = FitResult(
        GevParams(*res.x), method, res.fun, res.converged, res.n_eval, penalty, alpha_n
    )
    if not res.converged:
        raise ConvergenceError(f"{method} fit did not converge", best=result)
    return result


def fit_mle(x, init: GevParams | None = None, seed: int = 0) -> FitResult:
    """Maximum likelihood estimate via Nelder-Mead from the L-moment point."""
    arr = _check_sample(x, 5)
    start = init if init is not None else _default_init(arr)
    return _optimize_theta(
        lambda mu, sigma, xi: gev_neg_loglik(arr, mu, sigma, xi),
        start,
        "mle",
        FlatPenalty(),
        1.0,
        seed,
    )


def fit_gmle(x, penalty, init: GevParams | None = None, seed: int = 0) -> FitResult:
    """Penalized maximum likelihood: adds -ln p(xi) to the likelihood objective."""
    arr = _check_sample(x, 5)
    start = init if init is not None else _default_init(arr)
    if isinstance(penalty, AdaptiveBetaRequest):
        penalty = penalty.build(fit_lme(arr).params.xi)

    def objective(mu, sigma, xi):
        nll = gev_neg_loglik(arr, mu, sigma, xi)
        if nll >= SENTINEL:
            return SENTINEL
        val = nll + penalty.neg_log(xi)
        return val if math.isfinite(val) else SENTINEL

    method = "mle" if isinstance(penalty, FlatPenalty) else f"gmle.{penalty.label}"
    return _optimize_theta(objective, start, method, penalty, 1.0, seed)


def _objective_const(V: CovMatrix3) -> float:
    return 1.5 * math.log(2.0 * math.pi) + 0.5 * V.log_det


def _glme_value(l: LMomentTriple, V: CovMatrix3, const, mu, sigma, xi, penalty, alpha_n):
    if sigma <= 0 or not _XI_LO < xi < _XI_HI:
        return SENTINEL
    lam = gev_population_lmoments(GevParams(mu, sigma, xi))
    val = 0.5 * gld(lam, l, V) + alpha_n * penalty.neg_log(xi) + const
    return val if math.isfinite(val) else SENTINEL


def glme_objective(x, V: CovMatrix3, params: GevParams, penalty=FlatPenalty(),
                   alpha_n: float = 1.0) -> float:
    """Penalized negative log of the normal approximation at ``params``.

    Equals ``gld/2 + alpha_n * (-ln p(xi)) + C`` where the constant
    ``C = 1.5*log(2*pi) + 0.5*log det V`` does not depend on the parameters.
    """
    l = sample_lmoments(np.asarray(x, dtype=float))
    return _glme_value(l, V, _objective_const(V), params.mu, params.sigma, params.xi,
                       penalty, alpha_n)


def fit_glme(
    x,
    penalty=FlatPenalty(),
    alpha_n: float = 1.0,
    cov_method: str = "bootstrap",
    B: int = 1000,
    seed: int = 0,
    V: CovMatrix3 | None = None,
) -> FitResult:
    """Penalty-weighted L-moment fit.

    The covariance ``V`` is estimated once from the observed sample and held
    fixed; the search starts at the plain L-moment estimate.  An
    :class:`AdaptiveBetaRequest` penalty is built from that estimate's shape.
    """
    arr = _check_sample(x, 5)
    lme = fit_lme(arr)
    if isinstance(penalty, AdaptiveBetaRequest):
        penalty = penalty.build(lme.params.xi)
    if V is None:
        V = lmoment_cov(arr, method=cov_method, B=B, seed=seed)
    l = sample_lmoments(arr)
    const = _objective_const(V)

    method = "glme" if isinstance(penalty, FlatPenalty) else f"glme.{penalty.label}"
    return _optimize_theta(
        lambda mu, sigma, xi: _glme_value(l, V, const, mu, sigma, xi, penalty, alpha_n),
        lme.params,
        method,
        penalty,
        alpha_n,
        seed,
    )


def profile_xi(
    x,
    method: str = "glme",
    penalty=FlatPenalty(),
    grid=None,
    alpha_n: float = 1.0,
    B: int = 1000,
    seed: int = 0,
) -> list[ProfilePoint]:
    """Profile curve over the shape: maximize the negated objective in
    (location, scale) at each grid value.

    Grid points where the inner optimizer fails are flagged, not fatal.
    """
    arr = _check_sample(x, 5)
    if grid is None:
        grid = np.linspace(-0.9, 0.3, 61)
    grid = np.asarray(grid, dtype=float)
    if np.any(grid <= -1) or np.any(grid >= 1):
        raise ValueError("profile grid must lie inside (-1, 1)")

    lme = fit_lme(arr)
    if isinstance(penalty, AdaptiveBetaRequest):
        penalty = penalty.build(lme.params.xi)

    if method in ("mle", "gmle"):
        def objective(mu, sigma, xi):
            nll = gev_neg_loglik(arr, mu, sigma, xi)
            if nll >= SENTINEL:
                return SENTINEL
            val = nll + penalty.neg_log(xi)
            return val if math.isfinite(val) else SENTINEL
    elif method in ("lme", "glme"):
        V = lmoment_cov(arr, B=B, seed=seed)
        l = sample_lmoments(arr)
        const = _objective_const(V)

        def objective(mu, sigma, xi):
            return _glme_value(l, V, const, mu, sigma, xi, penalty, alpha_n)
    else:
        raise ValueError(f"unknown profile method {method!r}")

    start = np.array([lme.params.mu, lme.params.sigma])
    scale = np.array([0.1 * abs(lme.params.mu) + 1.0, 0.1 * lme.params.sigma])
    out = []
    for xi in grid:
        def inner(v, xi=xi):
            mu, sigma = v
            if sigma <= 0:
                return SENTINEL
            return objective(mu, sigma, xi)

        res = nelder_mead(inner, start, scale, seed=seed)
        out.append(ProfilePoint(float(xi), -res.fun, res.converged and res.fun < SENTINEL))
    return out

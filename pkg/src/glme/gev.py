"""Generalized extreme value distribution: density, CDF, quantiles, sampling.

The shape parameter follows the Hosking sign convention throughout this
package: the distribution is heavy-tailed for ``xi < 0``, reduces to the
Gumbel distribution as ``xi -> 0``, and has a bounded upper tail for
``xi > 0``.  Density and CDF are

    f(x) = (1/sigma) * u**(1/xi - 1) * exp(-u**(1/xi)),   u = 1 - xi*(x - mu)/sigma
    F(x) = exp(-u**(1/xi)),

defined where ``u > 0``.  Outside the support the density is 0 and the CDF
clamps to 0 or 1 according to the sign of ``xi``, so likelihood code can
treat support violations smoothly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "XI_EPS",
    "GevParams",
    "ReturnSpec",
    "gev_pdf",
    "gev_cdf",
    "gev_quantile",
    "gev_sample",
    "gev_support",
    "return_level",
]

# Below this |xi| every formula switches to its Gumbel limit to avoid
# catastrophic cancellation.
XI_EPS = 1e-6


@dataclass(frozen=True)
class GevParams:
    """Location, scale and shape of a GEV distribution.

    Heavy tail for ``xi < 0`` (Hosking convention).  Estimators in this
    package constrain fitted ``xi`` to (-1, 1); the distribution itself is
    evaluable for any finite shape.
    """

    mu: float
    sigma: float
    xi: float

    def __post_init__(self):
        if not (math.isfinite(self.mu) and math.isfinite(self.sigma) and math.isfinite(self.xi)):
            raise ValueError("GEV parameters must be finite")
        if self.sigma <= 0:
            raise ValueError(f"scale must be positive, got {self.sigma}")

    def as_tuple(self) -> tuple[float, float, float]:
        return (self.mu, self.sigma, self.xi)


@dataclass(frozen=True)
class ReturnSpec:
    """A return period ``T`` (years) with its Gumbel variate ``y``.

    ``y = -log(1 - 1/T)`` is always derived from ``T``, never stored.
    """

    T: float

    def __post_init__(self):
        if not math.isfinite(self.T) or self.T <= 1:
            raise ValueError(f"return period must be > 1, got {self.T}")

    @property
    def y(self) -> float:
        return -math.log1p(-1.0 / self.T)


def _check_x(x) -> np.ndarray:
    arr = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise ValueError("x must be finite")
    return arr


def _maybe_scalar(arr: np.ndarray, scalar_in: bool):
    return float(arr) if scalar_in else arr


def gev_pdf(params: GevParams, x) -> float | np.ndarray:
    """Density of the GEV distribution; 0 outside the support."""
    arr = _check_x(x)
    scalar = arr.ndim == 0
    arr = np.atleast_1d(arr)
    mu, sigma, xi = params.as_tuple()
    z = (arr - mu) / sigma

    if abs(xi) < XI_EPS:
        with np.errstate(over="ignore"):
            out = np.exp(-z - np.exp(-z)) / sigma
        return _maybe_scalar(out[0] if scalar else out, scalar)

    u = 1.0 - xi * z
    out = np.zeros_like(z)
    inside = u > 0
    with np.errstate(over="ignore", divide="ignore", invalid="ignore"):
        lu = np.log(u[inside])
        t = np.exp(lu / xi)
        logf = (1.0 / xi - 1.0) * lu - t - math.log(sigma)
        out[inside] = np.exp(logf)
    return _maybe_scalar(out[0] if scalar else out, scalar)


def gev_cdf(params: GevParams, x) -> float | np.ndarray:
    """CDF of the GEV distribution, clamped to 0/1 at the support endpoints."""
    arr = _check_x(x)
    scalar = arr.ndim == 0
    arr = np.atleast_1d(arr)
    mu, sigma, xi = params.as_tuple()
    z = (arr - mu) / sigma

    if abs(xi) < XI_EPS:
        with np.errstate(over="ignore"):
            out = np.exp(-np.exp(-z))
        return _maybe_scalar(out[0] if scalar else out, scalar)

    u = 1.0 - xi * z
    # u <= 0 lies below the lower endpoint when xi < 0 (F = 0) and above the
    # upper endpoint when xi > 0 (F = 1).
    out = np.full_like(z, 0.0 if xi < 0 else 1.0)
    inside = u > 0
    with np.errstate(over="ignore", divide="ignore", invalid="ignore"):
        t = np.exp(np.log(u[inside]) / xi)
        out[inside] = np.exp(-t)
    return _maybe_scalar(out[0] if scalar else out, scalar)


def _quantile_from_y(params: GevParams, y) -> np.ndarray:
    """Quantile written in terms of y = -log(p); y > 0."""
    mu, sigma, xi = params.as_tuple()
    y = np.asarray(y, dtype=float)
    if abs(xi) < XI_EPS:
        return mu - sigma * np.log(y)
    # 1 - y**xi computed as -expm1(xi*log(y)) to keep precision near xi = 0
    return mu + sigma / xi * (-np.expm1(xi * np.log(y)))


def gev_quantile(params: GevParams, p) -> float | np.ndarray:
    """Quantile function, the inverse of :func:`gev_cdf` on (0, 1)."""
    arr = np.asarray(p, dtype=float)
    scalar = arr.ndim == 0
    arr = np.atleast_1d(arr)
    if np.any(~np.isfinite(arr)) or np.any(arr <= 0) or np.any(arr >= 1):
        raise ValueError("p must lie in the open interval (0, 1)")
    out = _quantile_from_y(params, -np.log(arr))
    return _maybe_scalar(out[0] if scalar else out, scalar)


def gev_support(params: GevParams) -> tuple[float, float]:
    """Support interval; one endpoint is infinite unless xi is 0."""
    mu, sigma, xi = params.as_tuple()
    if abs(xi) < XI_EPS:
        return (-math.inf, math.inf)
    endpoint = mu + sigma / xi
    if xi < 0:
        return (endpoint, math.inf)
    return (-math.inf, endpoint)


def gev_sample(params: GevParams, n: int, seed: int) -> np.ndarray:
    """Draw ``n`` values by inverse-CDF sampling; deterministic given seed."""
    if n < 1:
        raise ValueError(f"sample size must be >= 1, got {n}")
    rng = np.random.default_rng(seed)
    u = np.maximum(rng.random(n), 1e-15)
    return _quantile_from_y(params, -np.log(u))


def return_level(params: GevParams, T: float) -> float:
    """T-year return level, the 1 - 1/T quantile.

    Computed as ``mu + sigma/xi * (1 - y**xi)`` with ``y = -log(1 - 1/T)``,
    the form consistent with inverting the CDF above.
    """
    spec = ReturnSpec(float(T))
    return float(_quantile_from_y(params, spec.y))

"""Estimator selection by short method strings.

The grammar mirrors the row labels of comparison tables:

* ``lme``, ``mle``, ``glme`` (flat penalty)
* ``glme.b.cK`` -- adaptive beta penalty, choice K (1..6)
* ``glme.n.cK`` -- normal penalty, choice K (1..4)
* ``glme.ms`` / ``glme.park`` / ``glme.cannon`` -- fixed beta presets
* ``glme.cd`` -- exponential penalty with default hyperparameters
* ``glme.<family>:<k=v,...>`` -- anything the penalty grammar accepts
* ``gmle.<...>`` -- same penalty forms on the likelihood objective
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from . import estimators, nonstationary
from .penalties import (
    AdaptiveBetaRequest,
    FlatPenalty,
    NormalPenalty,
    parse_penalty,
)

__all__ = ["MethodSpec", "parse_method"]

_SHORT_CHOICE = re.compile(r"^(b|n)\.c(\d+)$")


@dataclass(frozen=True)
class MethodSpec:
    """A parsed estimator name: the objective kind plus its penalty."""

    kind: str  # lme | mle | gmle | glme
    penalty: object
    name: str

    @property
    def supports_nonstationary(self) -> bool:
        return self.kind in ("lme", "glme")

    def fit_stationary(self, x, cov_method: str = "bootstrap", B: int = 1000, seed: int = 0,
                       alpha_n: float = 1.0):
        if self.kind == "lme":
            return estimators.fit_lme(x)
        if self.kind == "mle":
            return estimators.fit_mle(x, seed=seed)
        if self.kind == "gmle":
            return estimators.fit_gmle(x, self.penalty, seed=seed)
        return estimators.fit_glme(
            x, self.penalty, alpha_n=alpha_n, cov_method=cov_method, B=B, seed=seed
        )

    def fit_ns(self, z, X, B: int = 1000, seed: int = 0, location_method: str = "tukey",
               refine: bool = False, alpha_n: float = 1.0):
        if not self.supports_nonstationary:
            raise ValueError(f"method {self.name!r} is not available for covariate models")
        if self.kind == "lme":
            return nonstationary.fit_ns_lme(
                z, X, location_method=location_method, seed=seed, refine=refine
            )
        return nonstationary.fit_ns_glme(
            z, X, self.penalty, alpha_n=alpha_n, B=B, seed=seed,
            location_method=location_method, refine=refine,
        )


def _penalty_from_suffix(suffix: str):
    m = _SHORT_CHOICE.match(suffix)
    if m:
        family, choice = m.group(1), int(m.group(2))
        if family == "b":
            return AdaptiveBetaRequest(choice)
        return NormalPenalty.from_choice(choice)
    return parse_penalty(suffix)


def parse_method(text: str) -> MethodSpec:
    name = text.strip()
    if not name:
        raise ValueError("empty method name")
    head, _, rest = name.partition(".")
    head = head.lower()
    if head == "lme":
        if rest:
            raise ValueError(f"method {name!r} takes no penalty suffix")
        return MethodSpec("lme", FlatPenalty(), "lme")
    if head == "mle":
        if rest:
            raise ValueError(f"method {name!r} takes no penalty suffix")
        return MethodSpec("mle", FlatPenalty(), "mle")
    if head in ("glme", "gmle"):
        penalty = _penalty_from_suffix(rest) if rest else FlatPenalty()
        return MethodSpec(head, penalty, name)
    raise ValueError(f"unknown method {text!r}")

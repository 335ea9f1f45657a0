"""Propensity models for P(M = 1 | X), with clamping into [c_L, c_U]."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import AllObservedOrAllMissing, DimensionMismatch
from .glm import LINKS, fit_binary_glm, inverse_link, with_intercept
from .numerics import as_matrix

CLAMP_LO = 0.01
CLAMP_HI = 0.99


def _check_clamps(lo: float, hi: float) -> None:
    if not 0.0 < lo < hi < 1.0:
        raise ValueError(f"need 0 < clamp_lo < clamp_hi < 1, got ({lo}, {hi})")


@dataclass(frozen=True, eq=False)
class PropensityFit:
    """A fitted logit/probit model; ``beta[0]`` is the intercept."""

    link: str
    beta: np.ndarray
    clamp_lo: float = CLAMP_LO
    clamp_hi: float = CLAMP_HI
    converged: bool = True
    iterations: int = 0

    def __post_init__(self):
        if self.link not in LINKS:
            raise ValueError(f"unknown link {self.link!r}")
        _check_clamps(self.clamp_lo, self.clamp_hi)

    @property
    def d(self) -> int:
        return len(self.beta) - 1

    def raw(self, x) -> np.ndarray:
        x = as_matrix(x, "x")
        if x.shape[1] != self.d:
            raise DimensionMismatch(f"x has {x.shape[1]} columns, model expects {self.d}")
        return inverse_link(self.link, with_intercept(x) @ self.beta)

    def predict(self, x) -> np.ndarray:
        return np.clip(self.raw(x), self.clamp_lo, self.clamp_hi)


@dataclass(frozen=True, eq=False)
class KnownPropensity:
    """Propensity known by design; ``fn`` maps an n-by-d matrix to probabilities."""

    fn: Callable[[np.ndarray], np.ndarray]
    clamp_lo: float = CLAMP_LO
    clamp_hi: float = CLAMP_HI
    link: str = "known"
    converged: bool = True

    def __post_init__(self):
        _check_clamps(self.clamp_lo, self.clamp_hi)

    def predict(self, x) -> np.ndarray:
        x = as_matrix(x, "x")
        return np.clip(np.asarray(self.fn(x), dtype=np.float64), self.clamp_lo, self.clamp_hi)


def fit_glm(x, m, link: str = "logit", clamp_lo: float = CLAMP_LO,
            clamp_hi: float = CLAMP_HI) -> PropensityFit:
    """Fit ``P(M=1|X)`` with an intercept plus main effects."""
    x = as_matrix(x, "x")
    m = np.asarray(m)
    if m.shape != (x.shape[0],):
        raise DimensionMismatch("m length must equal the number of rows of x")
    if m.min() == m.max():
        raise AllObservedOrAllMissing("indicator is constant; propensity is not estimable")
    if x.shape[0] < x.shape[1] + 2:
        raise ValueError(f"need at least d + 2 = {x.shape[1] + 2} rows")
    res = fit_binary_glm(with_intercept(x), m, link)
    return PropensityFit(link=link, beta=res.beta, clamp_lo=clamp_lo, clamp_hi=clamp_hi,
                         converged=res.converged, iterations=res.iterations)


def predict_pi(fit, x) -> np.ndarray:
    return fit.predict(x)


def resolve_pi(pi, x: np.ndarray) -> np.ndarray:
    """Turn a propensity model, a per-row array, or ``None`` (all ones) into a vector."""
    n = x.shape[0]
    if pi is None:
        return np.ones(n)
    if hasattr(pi, "predict"):
        return pi.predict(x)
    p = np.asarray(pi, dtype=np.float64)
    if p.shape != (n,):
        raise DimensionMismatch(f"propensity vector has shape {p.shape}, expected ({n},)")
    if np.any(p <= 0) or np.any(p > 1):
        raise ValueError("propensities must lie in (0, 1]")
    return p

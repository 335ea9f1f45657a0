"""Binary-response GLM fitting by iteratively reweighted least squares.

Shared by the propensity model (M given X) and the classification outcome
model (Y given X).
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy.special import expit, log_ndtr, ndtr

from .errors import NoConvergence

LINKS = ("logit", "probit")
TOL = 1e-8
MAX_ITER = 100
WEIGHT_FLOOR = 1e-10


def with_intercept(x: np.ndarray) -> np.ndarray:
    return np.column_stack([np.ones(x.shape[0]), x])


def inverse_link(link: str, eta: np.ndarray) -> np.ndarray:
    if link == "logit":
        return expit(eta)
    if link == "probit":
        return ndtr(eta)
    raise ValueError(f"unknown link {link!r}")


def _derivative(link: str, eta: np.ndarray) -> np.ndarray:
    if link == "logit":
        p = expit(eta)
        return p * (1.0 - p)
    return np.exp(-0.5 * eta * eta) / np.sqrt(2.0 * np.pi)


def _deviance(link: str, eta: np.ndarray, y: np.ndarray) -> float:
    # -2 log-likelihood, computed on the log scale so saturation stays finite
    if link == "logit":
        ll = y * -np.logaddexp(0.0, -eta) + (1 - y) * -np.logaddexp(0.0, eta)
    else:
        ll = y * log_ndtr(eta) + (1 - y) * log_ndtr(-eta)
    return float(-2.0 * np.sum(ll))


@dataclass(frozen=True)
class GLMResult:
    beta: np.ndarray
    converged: bool
    iterations: int
    deviance: float


def fit_binary_glm(X: np.ndarray, y: np.ndarray, link: str) -> GLMResult:
    """Maximum likelihood for ``P(y=1|X) = g^{-1}(X beta)`` by IRLS.

    ``X`` is the full design (include the intercept column yourself).
    Iterates until ``max|delta beta| <= 1e-8`` or 100 iterations. A step that
    raises the deviance is halved up to 30 times. On non-convergence a
    :class:`NoConvergence` warning is issued and the lowest-deviance iterate
    is returned with ``converged=False``.
    """
    if link not in LINKS:
        raise ValueError(f"unknown link {link!r}")
    y = np.asarray(y, dtype=np.float64)
    beta = np.zeros(X.shape[1])
    eta = X @ beta
    dev = _deviance(link, eta, y)
    best = (dev, beta)
    converged = False
    it = 0
    for it in range(1, MAX_ITER + 1):
        e = eta
        mu = inverse_link(link, e)
        dmu = np.maximum(_derivative(link, e), WEIGHT_FLOOR)
        var = np.maximum(mu * (1.0 - mu), WEIGHT_FLOOR)
        w = np.maximum(dmu * dmu / var, WEIGHT_FLOOR)
        z = e + (y - mu) / dmu
        sw = np.sqrt(w)
        new, *_ = np.linalg.lstsq(X * sw[:, None], z * sw, rcond=None)
        step = new - beta
        new_dev = _deviance(link, X @ new, y)
        halvings = 0
        while not new_dev <= dev + 1e-12 * (1.0 + abs(dev)) and halvings < 30:
            step *= 0.5
            new = beta + step
            new_dev = _deviance(link, X @ new, y)
            halvings += 1
        beta, eta, dev = new, X @ new, new_dev
        if dev < best[0]:
            best = (dev, beta)
        if np.max(np.abs(step)) <= TOL:
            converged = True
            break
    if not converged:
        warnings.warn(
            f"IRLS ({link}) did not converge in {MAX_ITER} iterations; "
            "data may be separated",
            NoConvergence,
            stacklevel=3,
        )
        dev, beta = best
    return GLMResult(beta=beta, converged=converged, iterations=it, deviance=dev)

"""Outcome models for Y given X and the augmentation term H-hat.

For the quadratic loss the conditional risk ``E[(Y - t)^2 | X]`` only needs
the conditional mean (and, for regression, the residual variance):

* regression:     H(x, t) = (mu(x) - t)^2 + sigma2
* classification: H(x, t) = 1 + t^2 + 2t - 4t P(Y=1|x),   mu(x) = 2P(Y=1|x) - 1
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .data import Dataset
from .errors import DimensionMismatch, RankDeficientBasis, SingleClass, TooFewCompleteCases
from .glm import fit_binary_glm, inverse_link, with_intercept
from .numerics import as_matrix

TASKS = ("regression", "classification")


@dataclass(frozen=True)
class BasisSpec:
    """Named feature map from raw covariates to regressors (intercept added later).

    ``link`` is the classification link used with this basis.
    """

    name: str
    n_in: int | None
    fn: Callable[[np.ndarray], np.ndarray]
    link: str = "logit"

    def __call__(self, x) -> np.ndarray:
        x = as_matrix(x, "x")
        if self.n_in is not None and x.shape[1] != self.n_in:
            raise DimensionMismatch(
                f"basis {self.name!r} takes {self.n_in} columns, got {x.shape[1]}"
            )
        return np.asarray(self.fn(x), dtype=np.float64).reshape(x.shape[0], -1)


def _setting1(x):
    return np.column_stack([np.exp(x[:, 0]), x[:, 1:5]])


def _setting2(x):
    return np.column_stack([x[:, 0] ** 2, x[:, 1]])


def _pathway_terms(x, p):
    # x = (Z, X1..Xp); returns Z plus the exact terms of h
    X = {j: x[:, j] for j in range(1, p + 1)}
    cols = [
        x[:, 0],
        np.cos(X[1]),
        X[2] ** 2,
        np.exp(-X[3]) * X[4],
        np.sin(X[5]) * np.cos(X[3]),
        X[1] * X[5],
    ]
    if p == 10:
        cols += [
            X[6] * np.sin(X[7]),
            np.cos(X[6]) * X[7],
            X[8] * np.sin(X[9]) * np.sin(X[10]),
            X[8] ** 3,
            X[8] * X[9],
            np.exp(X[10]) * np.cos(X[10]),
        ]
    return np.column_stack(cols)


BASES: dict[str, BasisSpec] = {
    "linear": BasisSpec("linear", None, lambda x: x),
    "setting1": BasisSpec("setting1", 5, _setting1),
    "setting2": BasisSpec("setting2", 2, _setting2, link="probit"),
    "setting3": BasisSpec("setting3", 6, lambda x: _pathway_terms(x, 5)),
    "setting4": BasisSpec("setting4", 11, lambda x: _pathway_terms(x, 10)),
}


def get_basis(name: str) -> BasisSpec:
    try:
        return BASES[name]
    except KeyError:
        raise ValueError(f"unknown basis {name!r}; choose from {sorted(BASES)}") from None


@dataclass(frozen=True, eq=False)
class OutcomeFit:
    task: str
    basis: BasisSpec
    beta: np.ndarray
    sigma2: float = 0.0
    link: str = "logit"
    converged: bool = True

    def design(self, x) -> np.ndarray:
        B = with_intercept(self.basis(x))
        if B.shape[1] != len(self.beta):
            raise DimensionMismatch("basis output does not match fitted coefficients")
        return B

    def prob_positive(self, x) -> np.ndarray:
        """P-hat(Y = 1 | x); classification only."""
        if self.task != "classification":
            raise ValueError("prob_positive is defined for classification fits")
        return inverse_link(self.link, self.design(x) @ self.beta)


def fit_regression_outcome(ds: Dataset, basis: BasisSpec | str = "linear") -> OutcomeFit:
    """OLS of observed y on basis(x) over complete cases (the Gaussian MLE).

    ``sigma2`` is the complete-case mean squared residual.
    """
    basis = get_basis(basis) if isinstance(basis, str) else basis
    cc = ds.observed
    B = with_intercept(basis(ds.x[cc]))
    if B.shape[0] < B.shape[1] + 1:
        raise TooFewCompleteCases(
            f"{B.shape[0]} complete cases for {B.shape[1] - 1} basis columns"
        )
    y = ds.y[cc]
    beta, _, rank, _ = np.linalg.lstsq(B, y, rcond=None)
    if rank < B.shape[1]:
        raise RankDeficientBasis(f"basis {basis.name!r} has rank {rank} < {B.shape[1]}")
    resid = y - B @ beta
    sigma2 = float(np.mean(resid * resid))
    return OutcomeFit("regression", basis, beta, sigma2=sigma2)


def fit_classification_outcome(ds: Dataset, basis: BasisSpec | str = "linear") -> OutcomeFit:
    """Binary GLM for P(Y=1|X) on complete cases, labels in {-1, 1}."""
    basis = get_basis(basis) if isinstance(basis, str) else basis
    cc = ds.observed
    y = ds.y[cc]
    if not np.all((y == 1) | (y == -1)):
        raise ValueError("classification labels must be -1 or 1")
    if y.size == 0 or np.all(y == y[0]):
        raise SingleClass("complete cases contain a single label")
    res = fit_binary_glm(with_intercept(basis(ds.x[cc])), (y + 1) / 2, basis.link)
    return OutcomeFit("classification", basis, res.beta, link=basis.link,
                      converged=res.converged)


def fit_outcome(ds: Dataset, basis: BasisSpec | str, task: str) -> OutcomeFit:
    if task == "regression":
        return fit_regression_outcome(ds, basis)
    if task == "classification":
        return fit_classification_outcome(ds, basis)
    raise ValueError(f"unknown task {task!r}")


def mu_vector(fit: OutcomeFit, x) -> np.ndarray:
    """Conditional mean of Y at each row of ``x``."""
    if fit.task == "regression":
        return fit.design(x) @ fit.beta
    return 2.0 * fit.prob_positive(x) - 1.0


def h_hat(fit: OutcomeFit, x, t):
    """Estimated conditional quadratic risk ``E[(Y - t)^2 | X = x]``.

    ``x`` may be a single row (with scalar ``t``) or a matrix of rows with a
    matching vector ``t``.
    """
    x = np.asarray(x, dtype=np.float64)
    single = x.ndim == 1
    X = x.reshape(1, -1) if single else x
    t = np.asarray(t, dtype=np.float64)
    if fit.task == "regression":
        h = (mu_vector(fit, X) - t) ** 2 + fit.sigma2
    else:
        h = 1.0 + t * t + 2.0 * t - 4.0 * t * fit.prob_positive(X)
    return float(h[0]) if single else h

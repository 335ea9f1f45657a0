"""Data-generating mechanisms for the four benchmark settings.

Feature layouts (the columns a learner sees, written as ``x1..xd`` in CSV):

* setting 1: ``(X, U2, U3, U4, U5)``
* setting 2: ``(X1, X2)``, labels in {-1, 1}
* setting 3: ``(Z, X1..X5)``
* setting 4: ``(Z, X1..X10)``

Every draw comes from a Philox (counter-based) stream keyed by
``(seed, setting, n, purpose, replication)``, so replications can be
generated in any order or in parallel with identical results.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import expit

from .data import Dataset
from .errors import BadSettingId, DimensionMismatch

SETTINGS = (1, 2, 3, 4)
N_FEATURES = {1: 5, 2: 2, 3: 6, 4: 11}
TASK = {1: "regression", 2: "classification", 3: "regression", 4: "regression"}

_TRAIN, _TEST = 0, 1
_LOG3 = np.log(3.0)


@dataclass(frozen=True)
class SettingSpec:
    id: int
    n: int
    seed: int = 0
    include_truth: bool = True

    def __post_init__(self):
        _check_id(self.id)
        if self.n < 1:
            raise ValueError("n must be at least 1")


def _check_id(setting: int) -> None:
    if setting not in SETTINGS:
        raise BadSettingId(f"setting must be one of {SETTINGS}, got {setting!r}")


def stream(seed: int, *keys: int) -> np.random.Generator:
    """Independent Philox generator for ``(seed, *keys)``."""
    ss = np.random.SeedSequence(int(seed) & (2**64 - 1), spawn_key=tuple(int(k) for k in keys))
    return np.random.Generator(np.random.Philox(ss))


def _beta(rng: np.random.Generator, a: float, b: float, size: int) -> np.ndarray:
    ga = rng.standard_gamma(a, size)
    gb = rng.standard_gamma(b, size)
    return ga / (ga + gb)


def pathway_h(x: np.ndarray, p: int) -> np.ndarray:
    """The smooth effect ``h`` of settings 3 (p=5) and 4 (p=10); x is (n, p)."""
    X = {j: x[:, j - 1] for j in range(1, p + 1)}
    h = (10 * np.cos(X[1]) - 15 * X[2] ** 2 + 10 * np.exp(-X[3]) * X[4]
         - 8 * np.sin(X[5]) * np.cos(X[3]) + 20 * X[1] * X[5])
    if p == 10:
        h = h + (9 * X[6] * np.sin(X[7]) - 8 * np.cos(X[6]) * X[7]
                 + 20 * X[8] * np.sin(X[9]) * np.sin(X[10])
                 - 15 * X[8] ** 3 - 10 * X[8] * X[9] - np.exp(X[10]) * np.cos(X[10]))
    return h


def true_pi_matrix(setting: int, x) -> np.ndarray:
    """Mechanism probability P(M=1 | X) for each feature row."""
    _check_id(setting)
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2 or x.shape[1] != N_FEATURES[setting]:
        raise DimensionMismatch(
            f"setting {setting} rows have {N_FEATURES[setting]} features, got shape {x.shape}"
        )
    if setting == 1:
        t = x[:, 0]
        return np.where(t <= 2.0, expit(-4.5 * (t - 2.0)), expit(t - 4.0))
    if setting == 2:
        return expit(1.5 * (x[:, 1] - x[:, 0]))
    xs = x[:, 1:]
    return expit(-(4.0 / 3.0) * _LOG3 + (2.0 / 3.0) * _LOG3 * xs.mean(axis=1))


def true_pi(setting: int, x_row) -> float:
    x_row = np.asarray(x_row, dtype=np.float64)
    if x_row.ndim != 1:
        raise DimensionMismatch("x_row must be a single feature row")
    return float(true_pi_matrix(setting, x_row[None, :])[0])


def _draw(setting: int, n: int, rng: np.random.Generator):
    """Features and full responses for ``n`` units."""
    if setting == 1:
        X = 4.0 * _beta(rng, 5.0, 3.0, n)
        U = rng.uniform(0.0, 4.0, size=(n, 4))
        eps = rng.standard_normal(n)
        y = np.exp(X) + U.sum(axis=1) + eps
        return np.column_stack([X, U]), y
    if setting == 2:
        X = rng.uniform(0.0, 5.0, size=(n, 2))
        eps = rng.normal(0.0, 0.5, size=n)
        latent = X[:, 1] - (4.0 / 25.0) * X[:, 0] ** 2 - 1.0 + eps
        return X, np.where(latent >= 0.0, 1.0, -1.0)
    p = 5 if setting == 3 else 10
    X = rng.uniform(0.0, 1.0, size=(n, p))
    U = rng.uniform(0.0, 1.0, size=n)
    eps = rng.standard_normal(n)
    Z = 3.0 * np.cos(X[:, 0]) + 2.0 * U
    y = Z + pathway_h(X, p) + eps
    return np.column_stack([Z, X]), y


def generate(spec: SettingSpec, replication: int = 0) -> Dataset:
    """Training sample: responses masked where the mechanism draws M = 0."""
    rng = stream(spec.seed, spec.id, spec.n, _TRAIN, replication)
    x, y = _draw(spec.id, spec.n, rng)
    pi = true_pi_matrix(spec.id, x)
    m = (rng.uniform(size=spec.n) < pi).astype(np.int8)
    return Dataset(
        x=x,
        y=np.where(m == 1, y, np.nan),
        m=m,
        true_pi=pi if spec.include_truth else None,
        y_true=y if spec.include_truth else None,
    )


def generate_test(spec: SettingSpec, n_test: int) -> Dataset:
    """Fully observed test sample from a stream disjoint from every training draw."""
    if n_test < 1:
        raise ValueError("n_test must be at least 1")
    rng = stream(spec.seed, spec.id, spec.n, _TEST)
    x, y = _draw(spec.id, n_test, rng)
    return Dataset(
        x=x,
        y=y,
        m=np.ones(n_test, dtype=np.int8),
        true_pi=true_pi_matrix(spec.id, x),
        y_true=y,
    )

"""Quadratic-loss kernel machines for data with missing responses.

All three machines minimize ``lam * ||f||_H^2 + R(f)`` where ``R`` is an
empirical risk averaged over the sample, which is why ``n * lam`` appears
in every linear system below:

* ``cc``  - complete cases only, averaged over the n1 complete cases:
  ``(K1 + n1 lam I) alpha = y1``
* ``wcc`` - inverse-propensity weighted complete cases, ``W = diag(m / pi)``:
  ``(n lam I + W K) alpha = W y``
* ``dr``  - doubly robust, pseudo-response ``y~ = W y + (I - W) mu``:
  ``(K + n lam I) alpha = y~``

In the unaveraged parametrization (penalty against a plain loss sum) the
same solutions are obtained with ``lam' = n * lam``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data import Dataset
from .errors import (
    BadGrid,
    DimensionMismatch,
    NoCompleteCases,
    TooFewCompleteCases,
)
from .kernels import KernelSpec, gram
from .numerics import as_matrix, solve_general, solve_spd
from .outcome import OutcomeFit, h_hat, mu_vector
from .propensity import resolve_pi

KINDS = ("cc", "wcc", "dr")
DEFAULT_GRID = tuple(np.geomspace(1e-6, 1.0, 10))
DEFAULT_FOLDS = 5


@dataclass(frozen=True, eq=False)
class KernelMachine:
    """``f(x) = sum_i alpha_i k(support_i, x)``."""

    kind: str
    kernel: KernelSpec
    support: np.ndarray
    alpha: np.ndarray
    lam: float

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown machine kind {self.kind!r}")
        if not self.lam > 0:
            raise ValueError("lambda must be positive")
        if self.alpha.shape != (self.support.shape[0],):
            raise DimensionMismatch("alpha length must equal the number of support rows")

    def __call__(self, x) -> np.ndarray:
        return predict(self, x)


def _check_lam(lam: float) -> float:
    lam = float(lam)
    if not (np.isfinite(lam) and lam > 0):
        raise ValueError(f"lambda must be positive, got {lam}")
    return lam


def _gram_for(ds: Dataset, kernel: KernelSpec, K) -> np.ndarray:
    if K is None:
        return gram(kernel, ds.x)
    K = np.asarray(K)
    if K.shape != (ds.n, ds.n):
        raise DimensionMismatch(f"precomputed gram has shape {K.shape}, expected {(ds.n, ds.n)}")
    return K


def ipw_weights(ds: Dataset, pi) -> np.ndarray:
    """Diagonal of ``W``: ``m_i / pi_hat(x_i)``."""
    return ds.m / resolve_pi(pi, ds.x)


def fit_cc(ds: Dataset, kernel: KernelSpec, lam: float, *, K=None) -> KernelMachine:
    """Kernel ridge on the complete cases only (support = complete-case rows)."""
    lam = _check_lam(lam)
    cc = np.flatnonzero(ds.observed)
    if cc.size == 0:
        raise NoCompleteCases("no complete cases")
    K1 = gram(kernel, ds.x[cc]) if K is None else _gram_for(ds, kernel, K)[np.ix_(cc, cc)]
    n1 = cc.size
    alpha = solve_spd(K1 + n1 * lam * np.eye(n1), ds.y[cc])
    return KernelMachine("cc", kernel, ds.x[cc], alpha, lam)


def fit_wcc(ds: Dataset, kernel: KernelSpec, lam: float, pi, *, K=None) -> KernelMachine:
    """Weighted-complete-case machine.

    ``pi`` is a propensity model, a vector of per-row propensities, or
    ``None`` for ``pi == 1``. Coefficients on rows with ``m == 0`` are zero.
    """
    lam = _check_lam(lam)
    if ds.n_complete == 0:
        raise NoCompleteCases("no complete cases")
    K = _gram_for(ds, kernel, K)
    w = ipw_weights(ds, pi)
    A = w[:, None] * K
    A[np.diag_indices_from(A)] += ds.n * lam
    alpha = solve_general(A, w * ds.y_filled())
    alpha[~ds.observed] = 0.0
    return KernelMachine("wcc", kernel, ds.x, alpha, lam)


def pseudo_response(ds: Dataset, pi, out: OutcomeFit) -> np.ndarray:
    """``W y + (I - W) mu`` with absent responses zero-filled."""
    w = ipw_weights(ds, pi)
    return w * ds.y_filled() + (1.0 - w) * mu_vector(out, ds.x)


def fit_dr(ds: Dataset, kernel: KernelSpec, lam: float, pi, out: OutcomeFit, *,
           K=None) -> KernelMachine:
    """Doubly-robust machine: ridge on the augmented pseudo-response."""
    lam = _check_lam(lam)
    K = _gram_for(ds, kernel, K)
    target = pseudo_response(ds, pi, out)
    A = K.copy()
    A[np.diag_indices_from(A)] += ds.n * lam
    alpha = solve_spd(A, target)
    return KernelMachine("dr", kernel, ds.x, alpha, lam)


def fit_machine(kind: str, ds: Dataset, kernel: KernelSpec, lam: float, pi=None,
                out: OutcomeFit | None = None, *, K=None) -> KernelMachine:
    if kind == "cc":
        return fit_cc(ds, kernel, lam, K=K)
    if kind == "wcc":
        return fit_wcc(ds, kernel, lam, pi, K=K)
    if kind == "dr":
        if out is None:
            raise ValueError("dr machine needs an outcome fit")
        return fit_dr(ds, kernel, lam, pi, out, K=K)
    raise ValueError(f"unknown machine kind {kind!r}")


def predict(machine: KernelMachine, x) -> np.ndarray:
    x = as_matrix(x, "x")
    if x.shape[1] != machine.support.shape[1]:
        raise DimensionMismatch(
            f"x has {x.shape[1]} columns, machine expects {machine.support.shape[1]}"
        )
    return gram(machine.kernel, x, machine.support) @ machine.alpha


def classify(machine: KernelMachine, x) -> np.ndarray:
    """Labels in {-1, 1}; ``sign(0)`` is taken as +1."""
    return np.where(predict(machine, x) >= 0.0, 1.0, -1.0)


# ---------------------------------------------------------------- risks


def _check_fvals(ds: Dataset, f_vals) -> np.ndarray:
    f = np.asarray(f_vals, dtype=np.float64)
    if f.shape != (ds.n,):
        raise DimensionMismatch(f"f_vals has shape {f.shape}, expected ({ds.n},)")
    return f


def weighted_empirical_risk(ds: Dataset, f_vals, pi) -> float:
    """``(1/n) sum_i m_i (y_i - f_i)^2 / pi_hat_i``."""
    f = _check_fvals(ds, f_vals)
    w = ipw_weights(ds, pi)
    return float(np.sum(w * (ds.y_filled() - f) ** 2) / ds.n)


def dr_empirical_risk(ds: Dataset, f_vals, pi, out: OutcomeFit) -> float:
    """Augmented risk ``(1/n) sum [m L / pi - (m - pi)/pi * H-hat]``; may be negative."""
    f = _check_fvals(ds, f_vals)
    p = resolve_pi(pi, ds.x)
    loss = (ds.y_filled() - f) ** 2
    aug = (ds.m - p) / p * h_hat(out, ds.x, f)
    return float(np.sum(ds.m * loss / p - aug) / ds.n)


# ---------------------------------------------------------------- tuning


def stratified_folds(m: np.ndarray, folds: int, seed: int) -> np.ndarray:
    """Fold label per row; observed and missing rows are dealt out separately."""
    rng = np.random.default_rng(seed)
    labels = np.empty(m.shape[0], dtype=np.int64)
    offset = 0
    for group in (np.flatnonzero(m == 1), np.flatnonzero(m == 0)):
        perm = rng.permutation(group)
        labels[perm] = (np.arange(perm.size) + offset) % folds
        offset += perm.size
    return labels


def cv_scores(ds: Dataset, kernel: KernelSpec, kind: str, pi=None, out=None,
              grid=DEFAULT_GRID, folds: int = DEFAULT_FOLDS, seed: int = 0, *,
              K=None) -> np.ndarray:
    """Mean held-out weighted risk for every grid value.

    Propensities (and the outcome model) come from the full data and are not
    refit inside folds.
    """
    grid = np.asarray(grid, dtype=np.float64)
    if grid.ndim != 1 or grid.size == 0 or not np.all(np.isfinite(grid) & (grid > 0)):
        raise BadGrid("grid must be a nonempty list of positive values")
    if folds < 2:
        raise BadGrid("need at least 2 folds")
    if folds > ds.n_complete:
        raise TooFewCompleteCases(f"{ds.n_complete} complete cases for {folds} folds")
    K = _gram_for(ds, kernel, K)
    p = resolve_pi(pi, ds.x)
    labels = stratified_folds(ds.m, folds, seed)
    scores = np.zeros((folds, grid.size))
    for k in range(folds):
        tr = np.flatnonzero(labels != k)
        va = np.flatnonzero(labels == k)
        d_tr, d_va = ds.subset(tr), ds.subset(va)
        K_tr = K[np.ix_(tr, tr)]
        K_va = K[np.ix_(va, tr)]
        for j, lam in enumerate(grid):
            mach = fit_machine(kind, d_tr, kernel, lam, p[tr], out, K=K_tr)
            if kind == "cc":
                f = K_va[:, ds.observed[tr]] @ mach.alpha
            else:
                f = K_va @ mach.alpha
            scores[k, j] = weighted_empirical_risk(d_va, f, p[va])
    return scores.mean(axis=0)


def select_lambda(ds: Dataset, kernel: KernelSpec, kind: str, pi=None, out=None,
                  grid=DEFAULT_GRID, folds: int = DEFAULT_FOLDS, seed: int = 0, *,
                  K=None) -> float:
    """k-fold CV choice of lambda; ties go to the larger value."""
    grid = np.asarray(grid, dtype=np.float64)
    if grid.size == 1 and grid.ndim == 1 and grid[0] > 0:
        return float(grid[0])
    scores = cv_scores(ds, kernel, kind, pi, out, grid, folds, seed, K=K)
    best = np.min(scores)
    ties = grid[scores == best]
    return float(np.max(ties))


# ---------------------------------------------------------------- persistence

MAGIC = "kmissing-machine 1"


def _f(v: float) -> str:
    return format(float(v), ".17g")


def save_machine(machine: KernelMachine, path) -> None:
    """Flat text format, every float written with 17 significant digits."""
    k = machine.kernel
    n, d = machine.support.shape
    lines = [
        MAGIC,
        f"kind {machine.kind}",
        f"kernel {k.family} {_f(k.gamma)}",
        f"lambda {_f(machine.lam)}",
        f"support {n} {d}",
    ]
    lines += [" ".join(_f(v) for v in row) for row in machine.support]
    lines.append(f"alpha {n}")
    lines += [_f(a) for a in machine.alpha]
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def load_machine(path) -> KernelMachine:
    with open(path, encoding="utf-8") as fh:
        lines = [ln.strip() for ln in fh if ln.strip()]
    try:
        if lines[0] != MAGIC:
            raise ValueError("not a kmissing machine file")
        kind = lines[1].split()[1]
        _, family, gamma = lines[2].split()
        lam = float(lines[3].split()[1])
        _, n, d = lines[4].split()
        n, d = int(n), int(d)
        support = np.array([[float(v) for v in ln.split()] for ln in lines[5:5 + n]])
        support = support.reshape(n, d)
        if lines[5 + n] != f"alpha {n}":
            raise ValueError("alpha header mismatch")
        alpha = np.array([float(v) for v in lines[6 + n:6 + 2 * n]])
    except (IndexError, ValueError) as exc:
        from .errors import ParseError

        raise ParseError(f"{path}: malformed machine file: {exc}") from None
    return KernelMachine(kind, KernelSpec(family, float(gamma)), support, alpha, lam)

"""Kernel functions and Gram matrices."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateData, DimensionMismatch
from .numerics import as_matrix

FAMILIES = ("rbf", "linear")
MEDIAN_SUBSAMPLE = 1000


@dataclass(frozen=True)
class KernelSpec:
    """Kernel family plus its width.

    ``gamma`` is only meaningful for ``rbf``, where
    ``k(x, z) = exp(-gamma * ||x - z||^2)``.
    """

    family: str = "rbf"
    gamma: float = 1.0

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown kernel family {self.family!r}")
        if self.family == "rbf" and not (np.isfinite(self.gamma) and self.gamma > 0):
            raise ValueError("rbf kernel needs gamma > 0")

    @property
    def bounded(self) -> bool:
        """True iff sup_x k(x, x) <= 1 on arbitrary inputs."""
        return self.family == "rbf"

    def __str__(self) -> str:
        if self.family == "rbf":
            return f"rbf:{self.gamma!r}"
        return "linear"

    @classmethod
    def parse(cls, text: str) -> "KernelSpec | None":
        """Parse ``rbf``, ``rbf:GAMMA`` or ``linear``.

        Returns ``None`` for a bare ``rbf`` (gamma to be chosen from data).
        """
        family, _, arg = text.partition(":")
        if family == "linear" and not arg:
            return cls("linear")
        if family == "rbf":
            return cls("rbf", float(arg)) if arg else None
        raise ValueError(f"bad kernel {text!r}; expected rbf, rbf:GAMMA or linear")


def eval_kernel(spec: KernelSpec, x, z) -> float:
    x = np.asarray(x, dtype=np.float64)
    z = np.asarray(z, dtype=np.float64)
    if x.shape != z.shape or x.ndim != 1:
        raise DimensionMismatch(f"points of shapes {x.shape} and {z.shape}")
    if spec.family == "rbf":
        return float(np.exp(-spec.gamma * np.sum((x - z) ** 2)))
    return float(np.dot(x, z))


def sq_distances(A: np.ndarray, B: np.ndarray) -> np.ndarray:
    d = np.sum(A * A, axis=1)[:, None] + np.sum(B * B, axis=1)[None, :] - 2.0 * (A @ B.T)
    np.maximum(d, 0.0, out=d)
    return d


def gram(spec: KernelSpec, A, B=None) -> np.ndarray:
    """Kernel matrix ``G[i, j] = k(A_i, B_j)``; ``B=None`` means ``B is A``.

    The square case is symmetrized explicitly and, for rbf, has an exact
    unit diagonal.
    """
    A = as_matrix(A, "A")
    same = B is None or B is A
    B = A if same else as_matrix(B, "B")
    if A.shape[1] != B.shape[1]:
        raise DimensionMismatch(f"point dimensions differ: {A.shape[1]} vs {B.shape[1]}")
    if spec.family == "linear":
        G = A @ B.T
        return 0.5 * (G + G.T) if same else G
    D = sq_distances(A, B)
    if same:
        D = 0.5 * (D + D.T)
        np.fill_diagonal(D, 0.0)
    return np.exp(-spec.gamma * D)


def median_bandwidth(A) -> float:
    """Median heuristic: ``1 / median`` of squared pairwise distances.

    At most ``MEDIAN_SUBSAMPLE`` evenly spaced rows are used. If more than
    half of the pairs coincide, the median over non-zero distances is used.
    """
    A = as_matrix(A, "A")
    n = A.shape[0]
    if n > MEDIAN_SUBSAMPLE:
        A = A[np.linspace(0, n - 1, MEDIAN_SUBSAMPLE).astype(int)]
        n = A.shape[0]
    if n < 2:
        raise DegenerateData("need at least two rows")
    iu = np.triu_indices(n, k=1)
    d2 = sq_distances(A, A)[iu]
    med = float(np.median(d2))
    if med <= 0.0:
        pos = d2[d2 > 0.0]
        if pos.size == 0:
            raise DegenerateData("all rows are identical")
        med = float(np.median(pos))
    return 1.0 / med
